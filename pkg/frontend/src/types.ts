/** Wire types for the pricing service. Field names mirror the JSON exactly. */

export type Instance = Record<string, number>;

export interface ContributionDoc {
  feature: string;
  label: string;
  bin_index: number;
  weight: number;
}

export interface ExplanationFlags {
  degenerate_local: boolean;
  out_of_range: boolean;
  range_source: string;
}

export interface ExplanationDoc {
  predicted_value: number;
  local_range: { min: number; max: number };
  contributions: ContributionDoc[];
  surrogate_intercept: number;
  surrogate_r2: number;
  instance_values: Record<string, number>;
  seed: number;
  flags: ExplanationFlags;
}

export interface ExplainResponse {
  model_id: string;
  explanation: ExplanationDoc;
  text: string;
}

export interface WhatIfResponse {
  model_id: string;
  base: ExplanationDoc;
  modified: ExplanationDoc;
  delta: number;
}

export interface ModelDoc {
  format_version: number;
  schema: { feature_names: string[]; target_name: string };
  coefficients: Record<string, number>;
  intercept: number;
  original_coefficients: Record<string, number>;
  original_intercept: number;
  lambda: number;
  dropped: string[];
  prediction_range: [number, number] | null;
}

export interface DiscretizationDoc {
  feature_names: string[];
  edges: number[][];
  frequencies: number[][];
  bin_mins: number[][];
  bin_maxs: number[][];
  n_train: number;
}

export interface MetricsDoc {
  rmse: number;
  mae: number;
  r2: number;
}

export interface ModelEntry {
  format: string;
  model_id: string;
  dataset_id: string;
  created_at: string;
  lambda: number;
  train_fraction: number;
  split_seed: number;
  n_bins: number;
  model: ModelDoc;
  discretization: DiscretizationDoc;
  metrics: { train: MetricsDoc; holdout: MetricsDoc };
}

export interface ApiErrorBody {
  code: "bad_request" | "not_found" | "conflict" | "unprocessable" | "internal";
  message: string;
  detail?: unknown;
}

export interface ExplainRequest {
  instance: Instance;
  num_samples?: number;
  num_features?: number;
  seed?: number;
  kernel_width?: number;
}

export interface WhatIfRequest extends ExplainRequest {
  overrides: Instance;
}
