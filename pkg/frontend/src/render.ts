/**
 * DOM rendering. Pure templates plus small attach helpers; all state
 * lives in the controllers, all scoring lives on the server.
 */

import type { Article, ArticleSummary, FeatureSpec, SessionPayload } from "./types.js";
import type { WizardState } from "./wizard.js";

export function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

export function renderWorklist(
  root: HTMLElement,
  articles: ArticleSummary[],
  onPick: (articleId: string) => void,
  exportUrl: string,
): void {
  root.replaceChildren();
  const header = el("div", "toolbar");
  header.append(el("h1", "", "Article worklist"));
  const exportLink = el("a", "export-link", "Export incidents CSV");
  exportLink.setAttribute("href", exportUrl);
  header.append(exportLink);
  root.append(header);

  if (!articles.length) {
    root.append(el("p", "empty", "No articles waiting. Fetch some with the CLI."));
    return;
  }
  const list = el("ul", "worklist");
  for (const article of articles) {
    const item = el("li", `status-${article.status}`);
    const button = el("button", "pick", article.title || article.article_id);
    button.addEventListener("click", () => onPick(article.article_id));
    const meta = `${article.source || "unknown source"} | ${article.published ?? "no date"} | ${article.status}`;
    item.append(button, el("span", "meta", meta));
    list.append(item);
  }
  root.append(list);
}

export function renderArticlePane(article: Article): HTMLElement {
  const pane = el("section", "article-pane");
  pane.append(el("h2", "", article.title));
  pane.append(el("p", "meta", `${article.source} ${article.published ?? ""}`));
  if (article.url) {
    const link = el("a", "source-url", article.url);
    link.setAttribute("href", article.url);
    link.setAttribute("target", "_blank");
    pane.append(link);
  }
  pane.append(el("p", "body", article.body || "(no body text returned by the feed)"));
  return pane;
}

export function renderScoreGauge(session: SessionPayload): HTMLElement {
  const gauge = el("div", "gauge");
  const fill = el("div", "gauge-fill");
  fill.style.width = `${Math.round(session.score * 100)}%`;
  const marker = el("div", "gauge-threshold");
  marker.style.left = `${Math.round(session.threshold * 100)}%`;
  marker.title = `threshold ${session.threshold}`;
  const label = el("span", "gauge-label", `score ${session.score.toFixed(2)}`);
  gauge.append(fill, marker, label);
  return gauge;
}

export function renderWizardPanel(
  root: HTMLElement,
  state: WizardState,
  currentQuestion: { nodeId: string; text: string } | null,
  history: Array<{ nodeId: string; text: string; answer: "yes" | "no" }>,
  onAnswer: (value: "yes" | "no") => void,
  onFinish: () => void,
): void {
  root.replaceChildren();
  root.append(renderScoreGauge(state.session));
  if (state.error) {
    root.append(el("p", "error-banner", `Rejected by the server: ${state.error}`));
  }

  if (history.length) {
    const answered = el("ol", "history");
    for (const entry of history) {
      answered.append(el("li", `answer-${entry.answer}`, `${entry.text} : ${entry.answer}`));
    }
    root.append(answered);
  }

  if (currentQuestion) {
    const card = el("div", "question-card");
    card.append(el("p", "question-text", currentQuestion.text));
    const yes = el("button", "answer-yes", "Yes");
    const no = el("button", "answer-no", "No");
    yes.disabled = no.disabled = state.submitting;
    yes.addEventListener("click", () => onAnswer("yes"));
    no.addEventListener("click", () => onAnswer("no"));
    card.append(yes, no);
    root.append(card);
  } else {
    const verdict = state.session.classification;
    root.append(
      el(
        "p",
        `verdict verdict-${verdict}`,
        `Final score ${state.session.score.toFixed(2)} vs threshold ${state.session.threshold}: ${verdict}`,
      ),
    );
    const finish = el("button", "finish", verdict === "relevant" ? "Enter incident features" : "Finish article");
    finish.addEventListener("click", onFinish);
    root.append(finish);
  }
}

function fieldInput(spec: FeatureSpec): HTMLElement {
  if (spec.kind === "boolean") {
    const select = el("select");
    select.name = spec.key;
    for (const [value, label] of [["", "(unknown)"], ["Y", "yes"], ["N", "no"], ["NA", "not applicable"]]) {
      const option = el("option", "", label);
      option.value = value ?? "";
      select.append(option);
    }
    return select;
  }
  if (spec.kind === "categorical") {
    const select = el("select");
    select.name = spec.key;
    select.append(el("option", "", "(unknown)"));
    for (const category of spec.categories ?? []) {
      const option = el("option", "", category);
      option.value = category;
      select.append(option);
    }
    return select;
  }
  const input = el("input");
  input.name = spec.key;
  if (spec.kind === "integer") {
    input.type = "number";
    input.step = "1";
  } else {
    input.type = "text";
    if (spec.kind === "date_range") input.placeholder = "YYYY-MM-DD/YYYY-MM-DD";
  }
  return input;
}

export function renderFeatureForm(
  root: HTMLElement,
  schema: FeatureSpec[],
  onSubmit: (label: "pos" | "neg", values: Record<string, string>) => void,
): void {
  const form = el("form", "feature-form");
  const labelRow = el("div", "field");
  labelRow.append(el("label", "", "Incident class"));
  const labelSelect = el("select");
  labelSelect.name = "__label";
  for (const [value, text] of [["pos", "forced-labor instance"], ["neg", "non-instance"]]) {
    const option = el("option", "", text);
    option.value = value ?? "pos";
    labelSelect.append(option);
  }
  labelRow.append(labelSelect);
  form.append(labelRow);

  for (const spec of schema) {
    const row = el("div", "field");
    row.dataset.key = spec.key;
    row.append(el("label", "", spec.display_name));
    row.append(fieldInput(spec));
    row.append(el("span", "field-error"));
    form.append(row);
  }
  const submit = el("button", "submit", "Save incident record");
  submit.type = "submit";
  form.append(submit);

  form.addEventListener("submit", (event) => {
    event.preventDefault();
    const values: Record<string, string> = {};
    for (const spec of schema) {
      const input = form.querySelector<HTMLInputElement | HTMLSelectElement>(`[name="${spec.key}"]`);
      if (input && input.value !== "") values[spec.key] = input.value;
    }
    const label = (form.querySelector<HTMLSelectElement>('[name="__label"]')?.value ?? "pos") as
      | "pos"
      | "neg";
    onSubmit(label, values);
  });
  root.replaceChildren(form);
}

/** Paint per-field violation messages; fields not mentioned are cleared. */
export function showFieldErrors(root: HTMLElement, grouped: Record<string, string[]>): void {
  root.querySelectorAll<HTMLElement>(".field").forEach((row) => {
    const span = row.querySelector<HTMLElement>(".field-error");
    if (!span) return;
    const messages = grouped[row.dataset.key ?? ""];
    span.textContent = messages ? messages.join("; ") : "";
    row.classList.toggle("invalid", Boolean(messages));
  });
}
