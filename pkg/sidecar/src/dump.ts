import { readFile, writeFile } from "node:fs/promises";

import { countTokens } from "./app.js";
import type { EmbedBackend } from "./backend.js";
import type { SidecarConfig } from "./config.js";
import { normalizeText } from "./stub.js";

/**
 * Embed every distinct line of a text file and write one JSON record per
 * line: {"text": ..., "vector": [...]}. Blank lines are skipped. Lines that
 * normalize to the same key are collapsed to the first occurrence, with a
 * warning, because the consumer indexes the file by normalized text and
 * would reject duplicate keys.
 */
export async function dumpEmbeddings(
  backend: EmbedBackend,
  config: SidecarConfig,
  inPath: string,
  outPath: string,
  warn: (message: string) => void = console.warn,
): Promise<number> {
  const raw = await readFile(inPath, "utf8");
  const texts: string[] = [];
  const seen = new Map<string, number>();
  const lines = raw.split("\n");
  for (let i = 0; i < lines.length; i++) {
    const line = lines[i].replace(/\r$/, "");
    if (line.trim() === "") {
      continue;
    }
    const lineNo = i + 1;
    if (countTokens(line) > config.maxTokens) {
      throw new Error(`line ${lineNo} is longer than ${config.maxTokens} tokens`);
    }
    const key = normalizeText(line);
    const first = seen.get(key);
    if (first !== undefined) {
      warn(`line ${lineNo} duplicates line ${first} after normalization, keeping the first`);
      continue;
    }
    seen.set(key, lineNo);
    texts.push(line);
  }

  const vectors: number[][] = [];
  for (let start = 0; start < texts.length; start += config.maxBatch) {
    const chunk = texts.slice(start, start + config.maxBatch);
    vectors.push(...(await backend.embed(chunk)));
  }

  const body = texts.map((text, i) => JSON.stringify({ text, vector: vectors[i] }) + "\n").join("");
  await writeFile(outPath, body, "utf8");
  return texts.length;
}
