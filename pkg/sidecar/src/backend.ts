import type { SidecarConfig } from "./config.js";
import { StubBackend } from "./stub.js";

export interface EmbedBackend {
  readonly modelId: string;
  readonly dimension: number;
  embed(texts: string[]): Promise<number[][]>;
}

export async function buildBackend(config: SidecarConfig): Promise<EmbedBackend> {
  if (config.stub) {
    return new StubBackend(config.stubDimension);
  }
  const { ModelBackend } = await import("./model.js");
  return ModelBackend.load(config.model, config.pooling);
}
