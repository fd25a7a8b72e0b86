import type { EmbedBackend } from "./backend.js";
import type { Pooling } from "./config.js";

type ExtractFn = (
  text: string,
  opts: { pooling: "mean" | "cls"; normalize: boolean },
) => Promise<{ data: ArrayLike<number> }>;

const POOLING_MAP: Record<Pooling, "mean" | "cls"> = {
  mean_tokens: "mean",
  first_token: "cls",
};

/**
 * Transformer backend, loaded on demand. The model library is an optional
 * install because it pulls in native code and model downloads; everything
 * else in the sidecar works without it.
 */
export class ModelBackend implements EmbedBackend {
  readonly modelId: string;
  readonly dimension: number;
  private readonly extract: ExtractFn;
  private readonly pooling: "mean" | "cls";
  private queue: Promise<unknown> = Promise.resolve();

  private constructor(modelId: string, pooling: "mean" | "cls", extract: ExtractFn, dimension: number) {
    this.modelId = modelId;
    this.pooling = pooling;
    this.extract = extract;
    this.dimension = dimension;
  }

  static async load(model: string, pooling: Pooling): Promise<ModelBackend> {
    const specifier = "@xenova/transformers";
    let pipeline: (task: string, model: string) => Promise<ExtractFn>;
    try {
      ({ pipeline } = await import(specifier));
    } catch {
      throw new Error(
        "the model backend needs @xenova/transformers (npm install @xenova/transformers); " +
          "pass --stub to run without a model",
      );
    }
    const extract = await pipeline("feature-extraction", model);
    const mapped = POOLING_MAP[pooling];
    const probe = await extract("dimension probe", { pooling: mapped, normalize: false });
    return new ModelBackend(model, mapped, extract, probe.data.length);
  }

  async embed(texts: string[]): Promise<number[][]> {
    // Inference runs one item at a time behind a queue. Concurrent requests
    // must not interleave model calls, or identical inputs could produce
    // different floats depending on batch composition.
    const run = this.queue.then(async () => {
      const vectors: number[][] = [];
      for (const text of texts) {
        const result = await this.extract(text, { pooling: this.pooling, normalize: false });
        vectors.push(Array.from(result.data));
      }
      return vectors;
    });
    this.queue = run.catch(() => undefined);
    return run;
  }
}
