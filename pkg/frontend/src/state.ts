import type { SessionState } from "./types.js";

export interface Point {
  x: number;
  y: number;
}

/** Metric series for the two chart panels, straight from the service rows
 * (seed row included; rows without holdout metrics are skipped). */
export function metricSeries(state: SessionState): {
  accuracy: Point[];
  crossEntropy: Point[];
} {
  const accuracy: Point[] = [];
  const crossEntropy: Point[] = [];
  for (const row of state.metrics.rows) {
    if (row.accuracy !== null && Number.isFinite(row.accuracy)) {
      accuracy.push({ x: row.budget, y: row.accuracy });
    }
    if (row.sum_cross_entropy !== null && Number.isFinite(row.sum_cross_entropy)) {
      crossEntropy.push({ x: row.budget, y: row.sum_cross_entropy });
    }
  }
  return { accuracy, crossEntropy };
}

/** Queries asked so far, bucketed by kind index. */
export function kindHistogram(state: SessionState): number[] {
  const counts: number[] = [];
  for (const q of state.metrics.queries) {
    while (counts.length <= q.kind) counts.push(0);
    counts[q.kind] += 1;
  }
  return counts;
}

export interface BudgetGauge {
  spent: number;
  total: number;
  remaining: number;
}

export function budgetGauge(state: SessionState): BudgetGauge {
  const spent = state.metrics.budget_spent;
  const total = state.metrics.budget_total;
  return { spent, total, remaining: total - spent };
}
