/**
 * Review stepper: walks a reviewer through their assigned items with
 * approve / reject / edit controls. Edit opens a textarea pre-filled with
 * the current answer and submits it as the replacement payload.
 */

import type { DecisionKind, QueueView } from "./types";
import { renderMarkdown } from "./markdown";

export type SubmitDecision = (
  itemId: string,
  kind: DecisionKind,
  payload?: string
) => Promise<{ status: string }>;

export class ReviewQueue {
  private index = 0;
  private editing = false;
  private message = "";
  private readonly decided = new Set<string>();

  constructor(
    private readonly root: HTMLElement,
    private readonly queue: QueueView,
    private readonly submitDecision: SubmitDecision
  ) {
    // Start on the first item still awaiting this reviewer's decision.
    const firstPending = this.queue.items.findIndex((item) => item.status === "pending");
    this.index = firstPending === -1 ? this.queue.items.length : firstPending;
    this.render();
  }

  length(): number {
    return this.queue.items.length;
  }

  currentItemId(): string | undefined {
    return this.queue.items[this.index]?.item_id;
  }

  isDone(): boolean {
    return this.index >= this.queue.items.length;
  }

  openEditor(): void {
    this.editing = true;
    this.render();
  }

  async decide(kind: DecisionKind, payload?: string): Promise<void> {
    const item = this.queue.items[this.index];
    if (!item) return;
    try {
      const ack = await this.submitDecision(item.item_id, kind, payload);
      this.decided.add(item.item_id);
      this.message = `${item.item_id}: ${kind} recorded (item ${ack.status})`;
      this.editing = false;
      this.index += 1;
    } catch (error) {
      this.message = `decision failed: ${String(error)} — retry`;
    }
    this.render();
  }

  private render(): void {
    this.root.textContent = "";

    const progress = document.createElement("p");
    progress.className = "progress";
    progress.textContent = `${Math.min(this.index, this.length())} / ${this.length()} reviewed`;
    this.root.appendChild(progress);

    const item = this.queue.items[this.index];
    if (!item) {
      const done = document.createElement("p");
      done.className = "done";
      done.textContent = "queue complete";
      this.root.appendChild(done);
      if (this.message) this.appendMessage();
      return;
    }

    const card = document.createElement("section");
    card.className = "review-item";
    card.dataset.itemId = item.item_id;

    if (item.image_url) {
      const image = document.createElement("img");
      image.src = item.image_url;
      image.alt = "examination image";
      card.appendChild(image);
    }
    const question = document.createElement("p");
    question.className = "question";
    question.textContent = item.question ?? "";
    card.appendChild(question);

    const answer = document.createElement("div");
    answer.className = "answer";
    answer.innerHTML = renderMarkdown(item.reference_answer ?? "");
    card.appendChild(answer);

    if (this.editing) {
      const editor = document.createElement("textarea");
      editor.className = "editor";
      editor.value = item.reference_answer ?? "";
      card.appendChild(editor);
      const save = document.createElement("button");
      save.className = "save-edit";
      save.textContent = "Save edit";
      save.addEventListener("click", () => {
        void this.decide("edit", editor.value);
      });
      card.appendChild(save);
    } else {
      const approve = document.createElement("button");
      approve.className = "approve";
      approve.textContent = "Approve";
      approve.addEventListener("click", () => {
        void this.decide("approve");
      });
      const reject = document.createElement("button");
      reject.className = "reject";
      reject.textContent = "Reject";
      reject.addEventListener("click", () => {
        void this.decide("reject");
      });
      const edit = document.createElement("button");
      edit.className = "edit";
      edit.textContent = "Edit";
      edit.addEventListener("click", () => this.openEditor());
      card.append(approve, reject, edit);
    }

    this.root.appendChild(card);
    if (this.message) this.appendMessage();
  }

  private appendMessage(): void {
    const note = document.createElement("p");
    note.className = this.message.includes("failed") ? "banner error" : "banner";
    note.textContent = this.message;
    this.root.appendChild(note);
  }
}
