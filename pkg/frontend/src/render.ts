import type { QuestionPayload, SessionState } from "./types.js";

/** Pure view descriptors. The DOM layer (dom.ts) turns these into real
 * elements; tests assert on the descriptors directly. */

export interface AnswerButton {
  label: string;
  value: number;
}

export interface MemberCard {
  index: number;
  display: string | null;
  features: number[];
}

export interface QuestionView {
  kind: "question";
  title: string;
  prompt: string;
  memberCards: MemberCard[];
  buttons: AnswerButton[];
  cost: number;
  step: number;
  isSeed: boolean;
}

export interface SummaryView {
  kind: "summary";
  finalAccuracy: number | null;
  finalCrossEntropy: number | null;
  budgetSpent: number;
  questionsAsked: number;
}

export interface ErrorView {
  kind: "error";
  message: string;
}

export type View = QuestionView | SummaryView | ErrorView;

function memberCards(q: QuestionPayload): MemberCard[] {
  return q.members.map((index, i) => ({
    index,
    display: q.member_display ? q.member_display[i] : null,
    features: q.member_features[i],
  }));
}

export function renderQuestion(state: SessionState): View {
  if (state.status === "budget_exhausted") {
    const rows = state.metrics.rows;
    const last = rows.length ? rows[rows.length - 1] : null;
    return {
      kind: "summary",
      finalAccuracy: last ? last.accuracy : null,
      finalCrossEntropy: last ? last.sum_cross_entropy : null,
      budgetSpent: state.metrics.budget_spent,
      questionsAsked: state.metrics.queries.length,
    };
  }
  const q = state.question;
  if (!q) {
    return { kind: "error", message: "no pending question in an active session" };
  }
  if (q.family === "class") {
    return {
      kind: "question",
      title: "What class is this point?",
      prompt: q.is_seed ? "Seed labeling (free of budget)" : `Cost: ${q.cost}`,
      memberCards: memberCards(q),
      buttons: q.answer_set.map((c) => ({ label: `class ${c}`, value: c })),
      cost: q.cost,
      step: q.step,
      isSeed: q.is_seed,
    };
  }
  if (q.family === "all" || q.family === "any") {
    const quantifier = q.family === "all" ? "all" : "any";
    return {
      kind: "question",
      title: `Are ${quantifier} of these ${q.m} point(s) class ${q.target_class}?`,
      prompt: `Cost: ${q.cost}`,
      memberCards: memberCards(q),
      buttons: [
        { label: "yes", value: 1 },
        { label: "no", value: 0 },
      ],
      cost: q.cost,
      step: q.step,
      isSeed: q.is_seed,
    };
  }
  return { kind: "error", message: `unknown question kind: ${String(q.family)}` };
}
