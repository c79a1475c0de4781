/**
 * Application bootstrap: worklist -> per-article wizard -> feature form.
 */

import { ApiClient, ApiError } from "./api.js";
import {
  el,
  renderArticlePane,
  renderFeatureForm,
  renderWizardPanel,
  renderWorklist,
  showFieldErrors,
} from "./render.js";
import type { FeatureSpec } from "./types.js";
import { validateValues, violationsByField } from "./validation.js";
import { WizardController } from "./wizard.js";

const api = new ApiClient("");

function appRoot(): HTMLElement {
  const root = document.getElementById("app");
  if (!root) throw new Error("missing #app element");
  return root;
}

async function showWorklist(): Promise<void> {
  const root = appRoot();
  const pending = await api.listArticles("pending");
  const scored = await api.listArticles("scored");
  renderWorklist(root, [...pending, ...scored], (articleId) => void showWizard(articleId), api.exportIncidentsUrl());
}

async function showWizard(articleId: string): Promise<void> {
  const root = appRoot();
  root.replaceChildren(el("p", "loading", "Loading article..."));
  const controller = new WizardController(api, articleId);

  const layout = el("div", "wizard-layout");
  const articleSlot = el("div", "article-slot");
  const panelSlot = el("div", "panel-slot");
  const back = el("button", "back", "Back to worklist");
  back.addEventListener("click", () => void showWorklist());
  layout.append(back, articleSlot, panelSlot);

  controller.onChange((state) => {
    renderWizardPanel(
      panelSlot,
      state,
      controller.currentQuestion,
      controller.answeredHistory,
      (value) => void controller.answer(value),
      () => void finishArticle(controller, articleId),
    );
  });

  const state = await controller.start();
  articleSlot.append(renderArticlePane(state.article));
  root.replaceChildren(layout);
  controller.onChange(() => undefined); // keep listener list non-empty for clarity
  renderWizardPanel(
    panelSlot,
    state,
    controller.currentQuestion,
    controller.answeredHistory,
    (value) => void controller.answer(value),
    () => void finishArticle(controller, articleId),
  );
}

async function finishArticle(controller: WizardController, articleId: string): Promise<void> {
  if (controller.session.classification === "relevant" && !controller.session.completed) {
    await showFeatureForm(articleId, controller);
    return;
  }
  await controller.complete();
  await showWorklist();
}

async function showFeatureForm(articleId: string, controller: WizardController): Promise<void> {
  const root = appRoot();
  const schema: FeatureSpec[] = (await api.getSchema()).features;
  const container = el("div", "feature-entry");
  container.append(
    el("h2", "", "Incident record"),
    el("p", "hint", "Leave a field blank when the article does not say."),
  );
  const formSlot = el("div");
  const status = el("p", "form-status");
  container.append(formSlot, status);
  root.replaceChildren(container);

  renderFeatureForm(formSlot, schema, (label, values) => {
    void (async () => {
      const local = validateValues(schema, values);
      if (local.length) {
        showFieldErrors(formSlot, violationsByField(local));
        status.textContent = "Fix the highlighted fields.";
        return;
      }
      try {
        await api.postFeatures(articleId, { label, values });
        showFieldErrors(formSlot, {});
        await controller.complete();
        status.textContent = "Saved.";
        await showWorklist();
      } catch (error) {
        if (error instanceof ApiError && error.violations.length) {
          showFieldErrors(formSlot, violationsByField(error.violations));
          status.textContent = "The server rejected some fields.";
        } else if (error instanceof ApiError) {
          status.textContent = `Server error: ${error.detail}`;
        } else {
          throw error;
        }
      }
    })();
  });
}

void showWorklist().catch((error) => {
  appRoot().replaceChildren(el("p", "error-banner", `Failed to load: ${error}`));
});
