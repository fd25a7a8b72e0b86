import { createHash } from "node:crypto";

import type { EmbedBackend } from "./backend.js";

export const STUB_MODEL_ID = "deterministic-stub-sha256-v1";

/** Same rule the consumer applies before lookup: trim, collapse runs of
 * whitespace to single spaces, lowercase. */
export function normalizeText(text: string): string {
  return text.split(/\s+/).filter(Boolean).join(" ").toLowerCase();
}

/**
 * Hash-derived embedding. The vector is built in blocks of eight components:
 * block i is sha256(utf8(normalized text) + 0x00 + ascii(i)), and each of the
 * eight 4-byte words of the digest, read big-endian, becomes one component via
 * (word / 2^32) * 2 - 1, so every component lies in [-1, 1). The 0x00
 * separator cannot occur in the decimal block counter, so distinct
 * (text, block) pairs never collide. Everything here is exact integer math
 * followed by one float division, so the output is byte-identical across
 * machines and runtimes.
 */
export function stubVector(text: string, dimension: number): number[] {
  const key = normalizeText(text);
  const out: number[] = [];
  for (let block = 0; out.length < dimension; block++) {
    const digest = createHash("sha256")
      .update(key, "utf8")
      .update("\0")
      .update(String(block), "utf8")
      .digest();
    for (let word = 0; word < 8 && out.length < dimension; word++) {
      const u32 = digest.readUInt32BE(word * 4);
      out.push((u32 / 2 ** 32) * 2 - 1);
    }
  }
  return out;
}

export class StubBackend implements EmbedBackend {
  readonly modelId = STUB_MODEL_ID;
  readonly dimension: number;

  constructor(dimension: number) {
    this.dimension = dimension;
  }

  async embed(texts: string[]): Promise<number[][]> {
    return texts.map((text) => stubVector(text, this.dimension));
  }
}
