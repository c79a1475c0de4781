/**
 * Wizard controller: one frontier question at a time.
 *
 * The server is the source of truth. Every answer is POSTed and the
 * controller re-renders from the returned session, so the displayed
 * score is always the server's score, never a local computation. On a
 * 409/404 the entered state is kept, the error is surfaced, and the
 * session is re-synced from GET so a stale tab converges instead of
 * diverging.
 */

import { ApiClient, ApiError } from "./api.js";
import type { Article, SessionPayload, TreeNode } from "./types.js";

export interface WizardState {
  article: Article;
  session: SessionPayload;
  error: string | null;
  submitting: boolean;
}

export class WizardController {
  private questionText = new Map<string, string>();
  private state: WizardState | null = null;
  private listeners: Array<(state: WizardState) => void> = [];

  constructor(
    private readonly api: ApiClient,
    private readonly articleId: string,
  ) {}

  onChange(listener: (state: WizardState) => void): void {
    this.listeners.push(listener);
  }

  private emit(): void {
    const state = this.requireState();
    for (const listener of this.listeners) listener(state);
  }

  private requireState(): WizardState {
    if (!this.state) throw new Error("wizard not started");
    return this.state;
  }

  async start(): Promise<WizardState> {
    const [tree, article, session] = await Promise.all([
      this.api.getTree(),
      this.api.getArticle(this.articleId),
      this.api.getSession(this.articleId),
    ]);
    tree.nodes.forEach((node: TreeNode) => this.questionText.set(node.id, node.text));
    this.state = { article, session, error: null, submitting: false };
    this.emit();
    return this.state;
  }

  get session(): SessionPayload {
    return this.requireState().session;
  }

  get error(): string | null {
    return this.requireState().error;
  }

  /** First frontier question, or null once every reachable question resolved. */
  get currentQuestion(): { nodeId: string; text: string } | null {
    const frontier = this.session.frontier;
    const nodeId = frontier[0];
    if (nodeId === undefined) return null;
    return { nodeId, text: this.questionText.get(nodeId) ?? nodeId };
  }

  get done(): boolean {
    return this.session.frontier.length === 0;
  }

  get score(): number {
    return this.session.score;
  }

  /** Score the gauge shows; always the server's number, 2 decimals. */
  get displayScore(): string {
    return this.session.score.toFixed(2);
  }

  get answeredHistory(): Array<{ nodeId: string; text: string; answer: "yes" | "no" }> {
    return Object.entries(this.session.answers).map(([nodeId, answer]) => ({
      nodeId,
      text: this.questionText.get(nodeId) ?? nodeId,
      answer,
    }));
  }

  async answer(value: "yes" | "no"): Promise<void> {
    const state = this.requireState();
    const question = this.currentQuestion;
    if (!question || state.submitting) return;
    state.submitting = true;
    state.error = null;
    this.emit();
    try {
      state.session = await this.api.postAnswer(this.articleId, question.nodeId, value);
    } catch (error) {
      if (error instanceof ApiError) {
        state.error = error.detail;
        state.session = await this.api.getSession(this.articleId);
      } else {
        throw error;
      }
    } finally {
      state.submitting = false;
      this.emit();
    }
  }

  async complete(): Promise<SessionPayload> {
    const state = this.requireState();
    try {
      state.session = await this.api.complete(this.articleId);
      state.error = null;
    } catch (error) {
      if (error instanceof ApiError) {
        state.error = error.detail;
      } else {
        throw error;
      }
    }
    this.emit();
    return state.session;
  }
}
