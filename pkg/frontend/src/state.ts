// Pure helpers deriving view state from API payloads. No stage logic lives
// here beyond reading what the server reported; gates stay server-enforced.

import type { Questions, SessionView, TranscriptEntry } from "./types.js";

export const STAGE_LABELS: Record<string, string> = {
  TopicSelection: "Choosing topics",
  ElicitKnowledge: "Sharing what you know",
  ReviewKnowledge: "Reviewing the knowledge panel",
  Reflection: "Reflecting on what matters",
  NarrativeDraft: "Editing your journey",
  NarrativeConfirmed: "Preparing your questions",
  QuestionsReady: "Visit questions ready",
  Closed: "Session closed",
};

export function stageLabel(stage: string): string {
  return STAGE_LABELS[stage] ?? stage;
}

/** Transcript entries not yet rendered, given how many the chat has shown. */
export function newEntries(
  transcript: TranscriptEntry[],
  shown: number,
): TranscriptEntry[] {
  return transcript.slice(shown);
}

export function responseInputEnabled(view: SessionView): boolean {
  return ["ElicitKnowledge", "ReviewKnowledge", "Reflection"].includes(view.stage);
}

export interface ReflectionStatus {
  answered: number;
  total: number;
  done: boolean;
}

export function reflectionStatus(view: SessionView): ReflectionStatus {
  const total = view.reflection_prompts.length;
  const answered = view.reflection_answered;
  return { answered, total, done: total > 0 && answered >= total };
}

/**
 * The board renders exactly what the server sent: never truncated, never
 * padded. Returns the two columns as-is plus the threshold for display.
 */
export function boardModel(questions: Questions) {
  return {
    knowThem: questions.know_them,
    askThem: questions.ask_them,
    threshold: questions.threshold_used,
  };
}

export function formatFraction(fraction: number): string {
  return `${(fraction * 100).toFixed(1)}% of tokens changed`;
}

/** Server-reported progress rendered verbatim as a CSS percentage. */
export function progressPercent(progress: number): string {
  return `${Math.round(progress * 100)}%`;
}

export function citationLabel(
  view: SessionView,
  segmentId: string,
): string {
  const citation = view.citations[segmentId];
  if (!citation) {
    return segmentId.slice(0, 8);
  }
  return `${citation.book_id}, p. ${citation.page_number}`;
}
