/**
 * Shapes of the review-service JSON payloads as seen by the browser.
 * These mirror the server exactly: candidates carry blind labels only,
 * never model identifiers.
 */

export interface BlindedCandidate {
  label: string;
  report: string;
}

export interface BlindedItemView {
  item_id: string;
  image_url: string;
  question: string;
  candidates: BlindedCandidate[];
  already_submitted?: boolean;
}

export interface SessionView {
  session_id: string;
  item_ids: string[];
  candidate_count: number;
  submitted_item_ids: string[];
}

export type DecisionKind = "approve" | "reject" | "edit";

export interface QueueItem {
  item_id: string;
  status: "pending" | "accepted" | "rejected";
  question?: string;
  reference_answer?: string;
  image_url?: string;
}

export interface QueueView {
  batch_id: string;
  reviewer_id: string;
  items: QueueItem[];
}

export interface SubmitAck {
  event_id: number;
  status: string;
}
