import { chartSvg } from "./charts.js";
import type { View } from "./render.js";
import { budgetGauge, kindHistogram, metricSeries } from "./state.js";
import type { SessionState } from "./types.js";

/** Browser glue: apply pure view descriptors to the page. */

function el(id: string): HTMLElement {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node;
}

function memberTable(features: number[]): string {
  const cells = features.map((v) => `<td>${v.toFixed(3)}</td>`).join("");
  return `<table class="features"><tr>${cells}</tr></table>`;
}

export function applyView(view: View, onAnswer: (value: number, step: number) => void): void {
  const host = el("question");
  host.innerHTML = "";
  if (view.kind === "error") {
    host.innerHTML = `<div class="banner error">${view.message}</div>`;
    return;
  }
  if (view.kind === "summary") {
    const acc = view.finalAccuracy === null ? "n/a" : view.finalAccuracy.toFixed(4);
    const ce = view.finalCrossEntropy === null ? "n/a" : view.finalCrossEntropy.toFixed(2);
    host.innerHTML =
      `<div class="banner done">Budget exhausted after ${view.questionsAsked} questions ` +
      `(spent ${view.budgetSpent.toFixed(2)}). Final holdout accuracy ${acc}, ` +
      `summed cross-entropy ${ce}.</div>`;
    return;
  }
  const title = document.createElement("h2");
  title.textContent = view.title;
  const prompt = document.createElement("p");
  prompt.textContent = view.prompt;
  host.append(title, prompt);
  for (const card of view.memberCards) {
    const div = document.createElement("div");
    div.className = "member-card";
    if (card.display) {
      const img = document.createElement("img");
      img.src = card.display;
      img.alt = `point ${card.index}`;
      div.appendChild(img);
    } else {
      div.innerHTML = `<span class="member-id">point ${card.index}</span>` + memberTable(card.features);
    }
    host.appendChild(div);
  }
  const controls = document.createElement("div");
  controls.className = "controls";
  for (const button of view.buttons) {
    const b = document.createElement("button");
    b.textContent = button.label;
    b.addEventListener("click", () => {
      controls.querySelectorAll("button").forEach((x) => x.setAttribute("disabled", "true"));
      onAnswer(button.value, view.step);
    });
    controls.appendChild(b);
  }
  host.appendChild(controls);
}

export function applyMetrics(state: SessionState): void {
  const series = metricSeries(state);
  el("chart-accuracy").innerHTML = chartSvg(series.accuracy, "holdout accuracy");
  el("chart-cross-entropy").innerHTML = chartSvg(series.crossEntropy, "summed cross-entropy");
  const gauge = budgetGauge(state);
  const pct = gauge.total > 0 ? (100 * gauge.spent) / gauge.total : 0;
  el("budget-bar").style.width = `${Math.min(100, pct).toFixed(1)}%`;
  el("budget-text").textContent = `budget ${gauge.spent.toFixed(2)} / ${gauge.total.toFixed(2)}`;
  const counts = kindHistogram(state);
  el("kind-histogram").innerHTML = counts
    .map((n, k) => `<span class="kind-chip">kind ${k}: ${n}</span>`)
    .join(" ");
}

export function toast(message: string): void {
  const node = el("toast");
  node.textContent = message;
  node.classList.add("visible");
  setTimeout(() => node.classList.remove("visible"), 4000);
}
