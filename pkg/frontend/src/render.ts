/** HTML renderers over the view models; pure string builders for testability. */

import type { DebateView } from "./debate.js";
import type { GalleryView } from "./gallery.js";
import type { Timeline } from "./timeline.js";

export function escapeHtml(text: string): string {
  return text
    .replaceAll("&", "&amp;")
    .replaceAll("<", "&lt;")
    .replaceAll(">", "&gt;")
    .replaceAll('"', "&quot;");
}

export function renderTimeline(timeline: Timeline): string {
  const items = timeline.entries
    .map((entry) => {
      const duration =
        entry.durationSeconds === null ? "" : ` (${entry.durationSeconds.toFixed(2)}s)`;
      return `<li class="stage stage-${entry.state}">${escapeHtml(entry.stage)}${duration}</li>`;
    })
    .join("");
  const failure =
    timeline.terminal === "failed" && timeline.failureReason !== null
      ? `<p class="failure">${escapeHtml(timeline.failureReason)}</p>`
      : "";
  return `<ol class="timeline">${items}</ol>${failure}`;
}

export function renderDebate(view: DebateView): string {
  const banner = view.exhausted
    ? '<div class="banner banner-exhausted">Debate exhausted without agreement</div>'
    : "";
  const cards = view.cards
    .map((card) => {
      const error = card.executionError
        ? `<pre class="exec-error">${escapeHtml(card.executionError)}</pre>`
        : "";
      const diff =
        card.diff === null
          ? ""
          : `<pre class="diff">${card.diff
              .map((d) => {
                const prefix = d.type === "add" ? "+" : d.type === "del" ? "-" : " ";
                return `${prefix} ${escapeHtml(d.line)}`;
              })
              .join("\n")}</pre>`;
      return (
        `<section class="round round-${card.decision}">` +
        `<h3>Round ${card.roundIndex} — ${escapeHtml(card.critic)}: ${card.decision}</h3>` +
        `<p>${escapeHtml(card.rationale)}</p>${error}${diff}</section>`
      );
    })
    .join("");
  return `${banner}${cards}`;
}

export function renderGallery(view: GalleryView): string {
  const images = view.images
    .map((img) => `<figure><img src="${img.url}" alt="${escapeHtml(img.name)}"/></figure>`)
    .join("");
  const tables = view.tables
    .map((table) => {
      const head = `<tr>${table.header.map((h) => `<th>${escapeHtml(h)}</th>`).join("")}</tr>`;
      const firstPage = table.pages[0] ?? [];
      const body = firstPage
        .map((row) => `<tr>${row.map((c) => `<td>${escapeHtml(c)}</td>`).join("")}</tr>`)
        .join("");
      const pager =
        table.pages.length > 1
          ? `<nav class="pager" data-pages="${table.pages.length}"></nav>`
          : "";
      return `<table data-name="${escapeHtml(table.name)}">${head}${body}</table>${pager}`;
    })
    .join("");
  const missing = view.missing
    .map((name) => `<div class="placeholder">${escapeHtml(name)}: not found (404)</div>`)
    .join("");
  const report = view.report
    ? `<article class="report"><p>${escapeHtml(view.report.narrative)}</p><ul>${view.report.findings
        .map(
          (f) =>
            `<li>[${escapeHtml(f.evidence_ref)}] ${escapeHtml(f.statement)}</li>`,
        )
        .join("")}</ul><ol>${view.report.recommendations
        .map((r) => `<li>${escapeHtml(r)}</li>`)
        .join("")}</ol></article>`
    : "";
  return `${images}${tables}${missing}${report}`;
}
