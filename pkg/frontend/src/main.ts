/**
 * Page bootstrap: connect to the service, then open either the physician
 * ranking board or the reviewer queue. The token is kept in the ApiClient
 * instance only; nothing is written to storage.
 */

import { ApiClient, type FetchLike } from "./api";
import { RankingBoard } from "./rankingBoard";
import { ReviewQueue } from "./reviewQueue";

function element<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing #${id}`);
  return node as T;
}

async function openRanking(client: ApiClient, sessionId: string, mount: HTMLElement): Promise<void> {
  const session = await client.getSession(sessionId);
  const submitted = new Set(session.submitted_item_ids);
  const nextItem = session.item_ids.find((id) => !submitted.has(id)) ?? session.item_ids[0];
  if (!nextItem) {
    mount.textContent = "session has no items";
    return;
  }
  const item = await client.getItem(sessionId, nextItem);
  new RankingBoard(mount, item, (ordering) =>
    client.submitRanking(sessionId, item.item_id, ordering)
  );
}

async function openQueue(client: ApiClient, batchId: string, mount: HTMLElement): Promise<void> {
  const queue = await client.getQueue(batchId);
  new ReviewQueue(mount, queue, (itemId, kind, payload) =>
    client.submitDecision(batchId, itemId, kind, payload)
  );
}

export function wirePage(): void {
  const connect = element<HTMLButtonElement>("connect");
  connect.addEventListener("click", () => {
    const baseUrl = element<HTMLInputElement>("base-url").value.replace(/\/$/, "");
    const token = element<HTMLInputElement>("token").value;
    const target = element<HTMLInputElement>("target-id").value;
    const mode = element<HTMLSelectElement>("mode").value;
    const mount = element<HTMLDivElement>("mount");
    const client = new ApiClient(baseUrl, token, fetch.bind(globalThis) as FetchLike);
    const task = mode === "ranking" ? openRanking(client, target, mount) : openQueue(client, target, mount);
    task.catch((error) => {
      mount.textContent = "";
      const banner = document.createElement("p");
      banner.className = "banner error";
      banner.textContent = `connection failed: ${String(error)} — check token and retry`;
      mount.appendChild(banner);
    });
  });
}

if (typeof document !== "undefined" && document.getElementById("connect")) {
  wirePage();
}
