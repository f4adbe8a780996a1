// API payload types, mirroring the server's response models.

export interface Topic {
  topic_id: string;
  display_name: string;
}

export interface TranscriptEntry {
  turn_index: number;
  speaker: "System" | "Patient";
  text: string;
  timestamp: string;
  stage: string;
}

export interface PanelFactor {
  text: string;
  sources: string[];
}

export interface GridCell {
  option: string;
  dimension: string;
  text: string;
  sources: string[];
}

export interface OptionGrid {
  options: string[];
  dimensions: string[];
  cells: GridCell[];
}

export interface Panel {
  background_summary: string;
  decision_factors: PanelFactor[];
  option_grid: OptionGrid;
  generated_from?: string[];
}

export interface Narrative {
  original_text: string;
  edited_text: string;
  token_change_fraction: number;
  confirmed: boolean;
}

export interface KnowThemQuestion {
  question_id?: string;
  text: string;
  answer: string;
  sources: string[];
  score: number;
}

export interface AskThemQuestion {
  question_id?: string;
  text: string;
  score: number;
}

export interface Questions {
  know_them: KnowThemQuestion[];
  ask_them: AskThemQuestion[];
  threshold_used: number;
}

export interface Citation {
  book_id: string;
  page_number: number;
}

export interface SessionView {
  session_id: string;
  stage: string;
  selected_topics: string[];
  other_label: string | null;
  transcript: TranscriptEntry[];
  reflection_prompts: string[];
  reflection_answered: number;
  panel: Panel | null;
  narrative: Narrative | null;
  questions: Questions | null;
  citations: Record<string, Citation>;
}

export interface CreateSessionResponse {
  session_id: string;
  stage: string;
  topics: Topic[];
  transcript: TranscriptEntry[];
}

export interface IngestReport {
  book_id: string;
  page_count: number;
  segment_count: number;
  failed_pages: { filename: string; page_number: number; reason: string }[];
  skipped_files: string[];
}

export interface IngestJob {
  job_id: string;
  book_id: string;
  status: string;
  progress: number;
  report: IngestReport | null;
  error: string | null;
  created_at: string;
}

export interface ApiErrorBody {
  code: string;
  message: string;
  details: Record<string, unknown>;
  retriable: boolean;
}
