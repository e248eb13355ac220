import type { ExplanationDoc } from "./types.js";

/**
 * Display model for one explanation: the three panels in render order.
 *
 * Bars keep the service's contribution order untouched; the service already
 * sorts by effect size and the order is part of its contract.
 */
export interface ExplanationView {
  range: {
    min: string;
    predicted: string;
    max: string;
    markerPct: number;
    outOfRange: boolean;
  };
  bars: BarView[];
  noLocalEffect: boolean;
  r2: string;
  values: { name: string; value: string }[];
}

export interface BarView {
  label: string;
  signed: string;
  widthPct: number;
  positive: boolean;
}

const fmt = (v: number) => v.toFixed(2);

export function toView(doc: ExplanationDoc): ExplanationView {
  const { min, max } = doc.local_range;
  const span = max - min;
  const marker = span > 0 ? ((doc.predicted_value - min) / span) * 100 : 50;

  const largest = doc.contributions.reduce((m, c) => Math.max(m, Math.abs(c.weight)), 0);
  const bars = doc.contributions.map((c) => ({
    label: c.label,
    signed: `${c.weight >= 0 ? "+" : "-"}${fmt(Math.abs(c.weight))}`,
    widthPct: largest > 0 ? (Math.abs(c.weight) / largest) * 100 : 0,
    positive: c.weight >= 0,
  }));

  return {
    range: {
      min: fmt(min),
      predicted: fmt(doc.predicted_value),
      max: fmt(max),
      markerPct: Math.min(100, Math.max(0, marker)),
      outOfRange: doc.flags.out_of_range,
    },
    bars,
    noLocalEffect: doc.flags.degenerate_local,
    r2: doc.surrogate_r2.toFixed(3),
    values: Object.entries(doc.instance_values).map(([name, value]) => ({
      name,
      value: fmt(value),
    })),
  };
}

/** "+159.92" / "-3.10", the what-if price movement chip. */
export function formatDelta(delta: number): string {
  return `${delta >= 0 ? "+" : "-"}${fmt(Math.abs(delta))}`;
}
