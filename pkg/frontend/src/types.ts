/** Service payload shapes. These mirror the session service responses
 * exactly; the console performs no inference of its own. */

export type QuestionFamily = "class" | "all" | "any";

export interface QuestionPayload {
  step: number;
  kind_index: number;
  family: QuestionFamily;
  m: number;
  cost: number;
  is_seed: boolean;
  members: number[];
  member_features: number[][];
  member_display: string[] | null;
  target_class: number | null;
  answer_set: number[];
}

export interface MetricsRow {
  budget: number;
  accuracy: number | null;
  sum_cross_entropy: number | null;
  kind: number | null;
  entropy: number | null;
  level_s: number;
}

export interface QueryRow {
  step: number;
  kind: number;
  cost: number;
  answer: number;
  budget: number;
}

export interface MetricsPayload {
  rows: MetricsRow[];
  queries: QueryRow[];
  budget_spent: number;
  budget_total: number;
  status: string;
}

export interface SessionState {
  status: string;
  question: QuestionPayload | null;
  metrics: MetricsPayload;
}

export interface SessionCreated {
  id: string;
  status: string;
  n_classes: number;
  n_pool: number;
  budget: number;
  seed_points: number[];
}

export interface SessionResult extends SessionState {
  final: boolean;
  model?: { family: string; parameters: number[] };
  log?: Array<Record<string, unknown>>;
}
