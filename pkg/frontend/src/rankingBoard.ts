/**
 * Drag-rank board: all K blinded candidates side by side, an ordered ranking
 * strip, and a submit button that stays disabled until every candidate has
 * been placed. Cards can be dragged onto ranking slots or placed with
 * buttons (keyboard friendly, and what the tests drive).
 */

import { ApiError, isPermutationOf } from "./api";
import { renderMarkdown } from "./markdown";
import type { BlindedItemView } from "./types";

export type SubmitRanking = (ordering: string[]) => Promise<unknown>;

export class RankingBoard {
  private ranked: string[] = [];
  private locked = false;
  private message = "";

  constructor(
    private readonly root: HTMLElement,
    private readonly item: BlindedItemView,
    private readonly submitRanking: SubmitRanking
  ) {
    if (item.already_submitted) {
      this.locked = true;
      this.message = "already submitted";
    }
    this.render();
  }

  labels(): string[] {
    return this.item.candidates.map((candidate) => candidate.label);
  }

  currentOrdering(): string[] {
    return [...this.ranked];
  }

  isComplete(): boolean {
    return this.ranked.length === this.item.candidates.length;
  }

  isLocked(): boolean {
    return this.locked;
  }

  /** Append a candidate to the ranking (no-op if already placed or locked). */
  place(label: string): void {
    if (this.locked || this.ranked.includes(label) || !this.labels().includes(label)) {
      return;
    }
    this.ranked.push(label);
    this.render();
  }

  remove(label: string): void {
    if (this.locked) return;
    this.ranked = this.ranked.filter((entry) => entry !== label);
    this.render();
  }

  move(label: string, delta: number): void {
    if (this.locked) return;
    const from = this.ranked.indexOf(label);
    const to = from + delta;
    if (from < 0 || to < 0 || to >= this.ranked.length) return;
    const next = [...this.ranked];
    next.splice(from, 1);
    next.splice(to, 0, label);
    this.ranked = next;
    this.render();
  }

  async submit(): Promise<void> {
    if (this.locked || !this.isComplete()) return;
    if (!isPermutationOf(this.ranked, this.labels())) {
      this.message = "internal error: ranking is not a permutation";
      this.render();
      return;
    }
    try {
      await this.submitRanking(this.currentOrdering());
      this.locked = true;
      this.message = "ranking recorded";
    } catch (error) {
      if (error instanceof ApiError && error.status === 409) {
        this.locked = true;
        this.message = "already submitted";
      } else {
        this.message = `submit failed: ${String(error)} — retry`;
      }
    }
    this.render();
  }

  private render(): void {
    this.root.textContent = "";

    const question = document.createElement("p");
    question.className = "question";
    question.textContent = this.item.question;
    this.root.appendChild(question);

    if (this.item.image_url) {
      const image = document.createElement("img");
      image.className = "item-image";
      image.src = this.item.image_url;
      image.alt = "examination image";
      this.root.appendChild(image);
    }

    const cards = document.createElement("div");
    cards.className = "candidate-cards";
    for (const candidate of this.item.candidates) {
      const card = document.createElement("article");
      card.className = "candidate-card";
      card.dataset.label = candidate.label;
      card.draggable = !this.locked;
      card.addEventListener("dragstart", (event) => {
        event.dataTransfer?.setData("text/plain", candidate.label);
      });

      const title = document.createElement("h3");
      title.textContent = candidate.label;
      card.appendChild(title);

      const body = document.createElement("div");
      body.className = "report";
      body.innerHTML = renderMarkdown(candidate.report);
      card.appendChild(body);

      const placeButton = document.createElement("button");
      placeButton.className = "place";
      placeButton.textContent = "Rank next";
      placeButton.disabled = this.locked || this.ranked.includes(candidate.label);
      placeButton.addEventListener("click", () => this.place(candidate.label));
      card.appendChild(placeButton);

      cards.appendChild(card);
    }
    this.root.appendChild(cards);

    const strip = document.createElement("ol");
    strip.className = "ranking-strip";
    strip.addEventListener("dragover", (event) => event.preventDefault());
    strip.addEventListener("drop", (event) => {
      event.preventDefault();
      const label = event.dataTransfer?.getData("text/plain");
      if (label) this.place(label);
    });
    for (const label of this.ranked) {
      const slot = document.createElement("li");
      slot.dataset.label = label;
      slot.textContent = label;

      const up = document.createElement("button");
      up.className = "up";
      up.textContent = "↑";
      up.addEventListener("click", () => this.move(label, -1));
      const down = document.createElement("button");
      down.className = "down";
      down.textContent = "↓";
      down.addEventListener("click", () => this.move(label, 1));
      const drop = document.createElement("button");
      drop.className = "remove";
      drop.textContent = "✕";
      drop.addEventListener("click", () => this.remove(label));
      slot.append(" ", up, down, drop);
      strip.appendChild(slot);
    }
    this.root.appendChild(strip);

    const submit = document.createElement("button");
    submit.className = "submit-ranking";
    submit.textContent = "Submit ranking";
    submit.disabled = this.locked || !this.isComplete();
    submit.addEventListener("click", () => {
      void this.submit();
    });
    this.root.appendChild(submit);

    if (this.message) {
      const note = document.createElement("p");
      note.className = this.message.includes("failed") ? "banner error" : "banner";
      note.textContent = this.message;
      this.root.appendChild(note);
    }
  }
}
