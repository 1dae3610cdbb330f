/** Artifact gallery and report view models for a finished run. */

import type { ApiClient, ArtifactInfo, ReportView, RunStatus } from "./api.js";

export const TABLE_PAGE_SIZE = 50;

export interface ImageCard {
  name: string;
  url: string;
}

export interface TableGrid {
  name: string;
  url: string;
  header: string[];
  pages: string[][][];
  rowCount: number;
}

export interface GalleryView {
  images: ImageCard[];
  tables: TableGrid[];
  report: ReportView | null;
  missing: string[];
}

/** Minimal CSV split; engine-produced tables are plain comma-separated. */
export function parseCsv(text: string): string[][] {
  return text
    .split(/\r?\n/)
    .filter((line) => line.length > 0)
    .map((line) => line.split(","));
}

export function paginate(rows: string[][], pageSize = TABLE_PAGE_SIZE): string[][][] {
  const pages: string[][][] = [];
  for (let i = 0; i < rows.length; i += pageSize) {
    pages.push(rows.slice(i, i + pageSize));
  }
  return pages.length ? pages : [[]];
}

export async function buildGallery(
  api: ApiClient,
  runId: string,
  artifacts: ArtifactInfo[],
  report: ReportView | null,
): Promise<GalleryView> {
  const images: ImageCard[] = [];
  const tables: TableGrid[] = [];
  const missing: string[] = [];
  for (const artifact of artifacts) {
    if (artifact.kind === "image") {
      images.push({ name: artifact.name, url: api.artifactUrl(runId, artifact.name) });
    } else if (artifact.kind === "table") {
      const response = await api.fetchArtifact(runId, artifact.name);
      if (!response.ok) {
        missing.push(artifact.name);
        continue;
      }
      const rows = parseCsv(await response.text());
      tables.push({
        name: artifact.name,
        url: api.artifactUrl(runId, artifact.name),
        header: rows[0] ?? [],
        pages: paginate(rows.slice(1)),
        rowCount: Math.max(rows.length - 1, 0),
      });
    }
  }
  return { images, tables, report, missing };
}

/** "Refine query" control: pre-fill the console with the prior query text. */
export function refineQueryText(status: RunStatus): string {
  return status.query;
}
