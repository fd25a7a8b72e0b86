import { createHash } from "node:crypto";

import { describe, expect, it } from "vitest";

import { STUB_MODEL_ID, StubBackend, normalizeText, stubVector } from "../src/stub.js";

// Recomputes the documented construction along a different path: bytes are
// concatenated up front instead of streamed, and words are read from the hex
// string instead of the buffer. If the implementation drifts from
// "sha256(text + NUL + block counter), big-endian u32 words, scaled to
// [-1, 1)", these two disagree.
function referenceVector(text: string, dimension: number): number[] {
  const key = text.trim().replace(/\s+/g, " ").toLowerCase();
  const out: number[] = [];
  for (let block = 0; out.length < dimension; block++) {
    const material = Buffer.concat([
      Buffer.from(key, "utf8"),
      Buffer.from([0]),
      Buffer.from(String(block), "utf8"),
    ]);
    const hex = createHash("sha256").update(material).digest("hex");
    for (let word = 0; word < 8 && out.length < dimension; word++) {
      const u32 = parseInt(hex.slice(word * 8, word * 8 + 8), 16);
      out.push((u32 / 4294967296) * 2 - 1);
    }
  }
  return out;
}

describe("normalizeText", () => {
  it("collapses whitespace and lowercases", () => {
    expect(normalizeText("  Night \t Sweats ")).toBe("night sweats");
  });

  it("leaves already-normal text alone", () => {
    expect(normalizeText("night sweats")).toBe("night sweats");
  });
});

describe("stubVector", () => {
  it("matches an independent recomputation of the construction", () => {
    for (const text of ["fever", "night sweats", "Excessive Secretion of Urine", "中文 text"]) {
      for (const dimension of [1, 8, 16, 20]) {
        expect(stubVector(text, dimension)).toEqual(referenceVector(text, dimension));
      }
    }
  });

  it("reproduces frozen values", () => {
    expect(stubVector("fever", 4)).toEqual([
      0.9463055185042322, 0.12145874882116914, -0.3157812273129821, 0.3344827755354345,
    ]);
    expect(stubVector("night sweats", 2)).toEqual([0.8233511010184884, 0.6982858385890722]);
  });

  it("is insensitive to casing and extra whitespace", () => {
    const base = stubVector("night sweats", 16);
    expect(stubVector("Night   Sweats", 16)).toEqual(base);
    expect(stubVector("\tnight sweats\n", 16)).toEqual(base);
  });

  it("keeps every component in [-1, 1)", () => {
    for (const text of ["fever", "chills", "polyuria", "a", ""]) {
      for (const value of stubVector(text, 64)) {
        expect(value).toBeGreaterThanOrEqual(-1);
        expect(value).toBeLessThan(1);
      }
    }
  });

  it("gives different texts different vectors", () => {
    expect(stubVector("fever", 16)).not.toEqual(stubVector("chills", 16));
    expect(stubVector("fever", 16)).not.toEqual(stubVector("fevers", 16));
  });

  it("is a prefix-stable family: smaller dimensions are prefixes", () => {
    const long = stubVector("fever", 24);
    expect(stubVector("fever", 8)).toEqual(long.slice(0, 8));
    expect(stubVector("fever", 17)).toEqual(long.slice(0, 17));
  });

  it("is deterministic across calls", () => {
    expect(stubVector("polydipsia", 32)).toEqual(stubVector("polydipsia", 32));
  });
});

describe("StubBackend", () => {
  it("reports the stub model id and dimension", () => {
    const backend = new StubBackend(12);
    expect(backend.modelId).toBe(STUB_MODEL_ID);
    expect(backend.dimension).toBe(12);
  });

  it("embeds each text at the configured dimension", async () => {
    const backend = new StubBackend(6);
    const vectors = await backend.embed(["fever", "chills", "fever"]);
    expect(vectors).toHaveLength(3);
    for (const vector of vectors) {
      expect(vector).toHaveLength(6);
    }
    expect(vectors[0]).toEqual(vectors[2]);
    expect(vectors[0]).toEqual(stubVector("fever", 6));
  });
});
