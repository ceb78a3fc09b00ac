import { beforeEach, describe, expect, it } from "vitest";

import { ReviewQueue } from "../src/reviewQueue";
import type { DecisionKind, QueueView } from "../src/types";

function makeQueue(count = 4): QueueView {
  return {
    batch_id: "batch-1",
    reviewer_id: "rev-a",
    items: Array.from({ length: count }, (_, index) => ({
      item_id: `item-${index}`,
      status: "pending" as const,
      question: `Question ${index}?`,
      reference_answer: `Answer ${index}.`,
      image_url: `/images/${index}.png`,
    })),
  };
}

function mount(): HTMLElement {
  const root = document.createElement("div");
  document.body.appendChild(root);
  return root;
}

describe("ReviewQueue", () => {
  beforeEach(() => {
    document.body.innerHTML = "";
  });

  it("shows exactly the assigned items", () => {
    const root = mount();
    const queue = new ReviewQueue(root, makeQueue(4), async () => ({ status: "pending" }));
    expect(queue.length()).toBe(4);
    expect(root.querySelector(".review-item")?.getAttribute("data-item-id")).toBe("item-0");
  });

  it("approve advances to the next item", async () => {
    const root = mount();
    const calls: Array<[string, DecisionKind]> = [];
    const queue = new ReviewQueue(root, makeQueue(2), async (itemId, kind) => {
      calls.push([itemId, kind]);
      return { status: "pending" };
    });
    await queue.decide("approve");
    expect(calls).toEqual([["item-0", "approve"]]);
    expect(queue.currentItemId()).toBe("item-1");
    (root.querySelector(".reject") as HTMLButtonElement).click();
    await new Promise((resolve) => setTimeout(resolve, 0));
    expect(calls).toEqual([
      ["item-0", "approve"],
      ["item-1", "reject"],
    ]);
    expect(queue.isDone()).toBe(true);
    expect(root.querySelector(".done")?.textContent).toContain("queue complete");
  });

  it("edit opens a prefilled editor and submits kind=edit with payload", async () => {
    const root = mount();
    const calls: Array<[string, DecisionKind, string | undefined]> = [];
    const queue = new ReviewQueue(root, makeQueue(1), async (itemId, kind, payload) => {
      calls.push([itemId, kind, payload]);
      return { status: "pending" };
    });
    (root.querySelector(".edit") as HTMLButtonElement).click();
    const editor = root.querySelector(".editor") as HTMLTextAreaElement;
    expect(editor.value).toBe("Answer 0.");
    editor.value = "Corrected answer 0.";
    (root.querySelector(".save-edit") as HTMLButtonElement).click();
    await new Promise((resolve) => setTimeout(resolve, 0));
    expect(calls).toEqual([["item-0", "edit", "Corrected answer 0."]]);
    expect(queue.isDone()).toBe(true);
    void queue;
  });

  it("skips items already decided in an earlier session", () => {
    const root = mount();
    const view = makeQueue(3);
    view.items[0]!.status = "accepted";
    const queue = new ReviewQueue(root, view, async () => ({ status: "pending" }));
    expect(queue.currentItemId()).toBe("item-1");
  });

  it("stays on the item and shows a retry banner on failure", async () => {
    const root = mount();
    const queue = new ReviewQueue(root, makeQueue(2), async () => {
      throw new Error("boom");
    });
    await queue.decide("approve");
    expect(queue.currentItemId()).toBe("item-0");
    expect(root.querySelector(".banner.error")?.textContent).toContain("retry");
  });
});
