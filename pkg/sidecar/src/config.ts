export type Pooling = "mean_tokens" | "first_token";

export interface SidecarConfig {
  /** Model identifier for the real backend; ignored in stub mode. */
  model: string;
  pooling: Pooling;
  /** Whitespace-token cap per request item; longer items are rejected. */
  maxTokens: number;
  /** Item cap per /embed call; larger batches get 413. */
  maxBatch: number;
  host: string;
  port: number;
  /** Use the offline hash-derived backend instead of a model. */
  stub: boolean;
  stubDimension: number;
}

export const DEFAULTS: SidecarConfig = {
  model: "medicalai/ClinicalBERT",
  pooling: "mean_tokens",
  maxTokens: 512,
  maxBatch: 256,
  host: "127.0.0.1",
  port: 8756,
  stub: false,
  stubDimension: 16,
};

export function resolveConfig(overrides: Partial<SidecarConfig>): SidecarConfig {
  const config = { ...DEFAULTS, ...overrides };
  if (!Number.isInteger(config.maxTokens) || config.maxTokens < 1) {
    throw new Error(`maxTokens must be a positive integer, got ${config.maxTokens}`);
  }
  if (!Number.isInteger(config.maxBatch) || config.maxBatch < 1) {
    throw new Error(`maxBatch must be a positive integer, got ${config.maxBatch}`);
  }
  if (!Number.isInteger(config.stubDimension) || config.stubDimension < 1) {
    throw new Error(`stubDimension must be a positive integer, got ${config.stubDimension}`);
  }
  return config;
}
