/** Browser wiring: form submission, live timeline, debate and gallery panes. */

import { ApiClient, ApiError, DatasetRef, RunStatus } from "./api.js";
import { buildDebateView } from "./debate.js";
import { buildGallery, refineQueryText } from "./gallery.js";
import { renderDebate, renderGallery, renderTimeline } from "./render.js";
import { timelineFromStatus } from "./timeline.js";
import { watchRun } from "./events.js";

function element(id: string): HTMLElement {
  const node = document.getElementById(id);
  if (node === null) throw new Error(`missing element #${id}`);
  return node;
}

export function initConsole(baseUrl: string = ""): void {
  const api = new ApiClient(baseUrl);
  const form = element("query-form") as HTMLFormElement;
  const queryInput = element("query-input") as HTMLTextAreaElement;
  const datasetInput = element("dataset-input") as HTMLTextAreaElement;
  const errorPane = element("error-pane");
  const timelinePane = element("timeline-pane");
  const debatePane = element("debate-pane");
  const galleryPane = element("gallery-pane");
  const refineButton = element("refine-button") as HTMLButtonElement;

  let lastStatus: RunStatus | null = null;

  refineButton.addEventListener("click", () => {
    if (lastStatus !== null) queryInput.value = refineQueryText(lastStatus);
  });

  form.addEventListener("submit", async (event) => {
    event.preventDefault();
    errorPane.textContent = "";
    debatePane.innerHTML = "";
    galleryPane.innerHTML = "";
    let datasetRef: DatasetRef;
    try {
      datasetRef = JSON.parse(datasetInput.value) as DatasetRef;
    } catch {
      errorPane.textContent = "dataset reference must be valid JSON";
      return;
    }
    try {
      const runId = await api.submitRun(queryInput.value, datasetRef);
      const refresh = async () => {
        lastStatus = await api.getRun(runId);
        timelinePane.innerHTML = renderTimeline(timelineFromStatus(lastStatus));
      };
      const watcher = watchRun(baseUrl, runId, () => void refresh());
      await watcher.done;
      await refresh();
      if (lastStatus === null) return;
      if (lastStatus.stage === "done") {
        const [transcript, artifacts, report] = await Promise.all([
          api.getTranscript(runId),
          api.getArtifacts(runId),
          api.getReport(runId),
        ]);
        const initialSource = null; // initial revision ships inside the transcript rewrites
        debatePane.innerHTML = renderDebate(buildDebateView(transcript, initialSource));
        galleryPane.innerHTML = renderGallery(
          await buildGallery(api, runId, artifacts, report),
        );
      } else {
        const transcript = await api.getTranscript(runId).catch(() => null);
        if (transcript !== null) {
          debatePane.innerHTML = renderDebate(buildDebateView(transcript));
        }
      }
    } catch (err) {
      errorPane.textContent =
        err instanceof ApiError
          ? `service error: ${err.message}`
          : "connection failed — is the engine running? Submit again to retry.";
    }
  });
}
