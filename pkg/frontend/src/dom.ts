import { PricingClient } from "./api.js";
import { LatestWinsRequester } from "./debounce.js";
import { OverrideState } from "./state.js";
import { formatDelta, toView } from "./viewmodel.js";
import type { ExplainRequest, ExplanationDoc, Instance, ModelEntry, WhatIfResponse } from "./types.js";

function el<K extends keyof HTMLElementTagNameMap>(
  doc: Document, tag: K, className?: string, text?: string,
): HTMLElementTagNameMap[K] {
  const node = doc.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

/**
 * Replace `container`'s content with the three explanation panels:
 * prediction range, signed contribution bars (in the order the service
 * returned them), and the instance's actual values.
 */
export function renderExplanation(container: HTMLElement, doc: ExplanationDoc): void {
  const d = container.ownerDocument;
  const view = toView(doc);
  container.replaceChildren();

  const range = el(d, "section", "panel panel-range");
  range.append(el(d, "h3", undefined, "prediction"));
  const axis = el(d, "div", "range-axis");
  const marker = el(d, "span", "range-marker");
  marker.style.left = `${view.range.markerPct}%`;
  axis.append(marker);
  range.append(axis);
  range.append(el(d, "div", "range-min", view.range.min));
  const pred = el(d, "div", "range-predicted", view.range.predicted);
  if (view.range.outOfRange) {
    pred.append(el(d, "em", "out-of-range", " outside training range"));
  }
  range.append(pred);
  range.append(el(d, "div", "range-max", view.range.max));

  const contrib = el(d, "section", "panel panel-contributions");
  contrib.append(el(d, "h3", undefined, "contributions"));
  if (view.noLocalEffect) {
    contrib.append(el(d, "p", "no-local-effect", "no local effect"));
  }
  for (const bar of view.bars) {
    const row = el(d, "div", "bar");
    const fill = el(d, "span", `bar-fill ${bar.positive ? "positive" : "negative"}`);
    fill.style.width = `${bar.widthPct}%`;
    row.append(fill);
    row.append(el(d, "span", "bar-weight", bar.signed));
    row.append(el(d, "span", "bar-label", bar.label));
    contrib.append(row);
  }
  contrib.append(el(d, "p", "surrogate-r2", `local fit r2 ${view.r2}`));

  const values = el(d, "section", "panel panel-values");
  values.append(el(d, "h3", undefined, "values"));
  for (const row of view.values) {
    const line = el(d, "div", "value-row");
    line.append(el(d, "span", "value-name", row.name));
    line.append(el(d, "span", "value-number", row.value));
    values.append(line);
  }

  container.append(range, contrib, values);
}

export interface WhatIfPanelOptions {
  client: PricingClient;
  modelId: string;
  instance: Instance;
  feature: string;
  min: number;
  max: number;
  explain?: Omit<ExplainRequest, "instance">;
  delayMs?: number;
  onResult?: (res: WhatIfResponse) => void;
  onError?: (err: unknown) => void;
}

/**
 * One slider driving debounced what-if requests. The displayed delta and
 * re-rendered panels always belong to the newest applied value.
 */
export class WhatIfPanel {
  readonly root: HTMLElement;
  readonly slider: HTMLInputElement;
  readonly deltaEl: HTMLElement;
  readonly modifiedEl: HTMLElement;
  readonly overrides: OverrideState;
  private readonly runner: LatestWinsRequester<number, WhatIfResponse>;

  constructor(doc: Document, private readonly opts: WhatIfPanelOptions) {
    this.overrides = new OverrideState(opts.instance);
    this.root = el(doc, "section", "panel panel-whatif");
    this.root.append(el(doc, "h3", undefined, `what if: ${opts.feature}`));

    this.slider = el(doc, "input", "whatif-slider");
    this.slider.type = "range";
    this.slider.min = String(opts.min);
    this.slider.max = String(opts.max);
    this.slider.step = "any";
    this.slider.value = String(opts.instance[opts.feature]);
    this.root.append(this.slider);

    this.deltaEl = el(doc, "output", "whatif-delta", "—");
    this.root.append(this.deltaEl);
    this.modifiedEl = el(doc, "div", "whatif-modified");
    this.root.append(this.modifiedEl);

    this.runner = new LatestWinsRequester<number, WhatIfResponse>(
      (value) => this.send(value),
      (_value, res) => this.show(res),
      opts.delayMs ?? 150,
      opts.onError ?? ((err) => {
        this.deltaEl.textContent = err instanceof Error ? err.message : String(err);
        this.deltaEl.className = "whatif-delta error";
      }),
    );
    this.slider.addEventListener("input", () => {
      this.runner.input(Number(this.slider.value));
    });
  }

  private send(value: number): Promise<WhatIfResponse> {
    this.overrides.set(this.opts.feature, value);
    return this.opts.client.whatIf(this.opts.modelId, {
      instance: this.opts.instance,
      overrides: this.overrides.asRecord(),
      ...this.opts.explain,
    });
  }

  private show(res: WhatIfResponse): void {
    this.deltaEl.textContent = formatDelta(res.delta);
    this.deltaEl.className = `whatif-delta ${res.delta >= 0 ? "delta-up" : "delta-down"}`;
    renderExplanation(this.modifiedEl, res.modified);
    this.opts.onResult?.(res);
  }
}

/** Slider bounds for a feature, from the model entry's stored bin ranges. */
export function featureBounds(entry: ModelEntry, feature: string): { min: number; max: number } {
  const j = entry.discretization.feature_names.indexOf(feature);
  if (j < 0) throw new Error(`feature not in model: ${feature}`);
  const mins = entry.discretization.bin_mins[j]!;
  const maxs = entry.discretization.bin_maxs[j]!;
  return { min: mins[0]!, max: maxs[maxs.length - 1]! };
}
