#!/usr/bin/env node
import yargs from "yargs";
import { hideBin } from "yargs/helpers";

import { buildApp } from "./app.js";
import { buildBackend } from "./backend.js";
import { DEFAULTS, resolveConfig, type Pooling } from "./config.js";
import { dumpEmbeddings } from "./dump.js";

const sharedOptions = {
  model: {
    type: "string",
    default: DEFAULTS.model,
    describe: "model id for the transformer backend",
  },
  pooling: {
    choices: ["mean_tokens", "first_token"] as const,
    default: DEFAULTS.pooling as Pooling,
    describe: "how token vectors are reduced to one embedding",
  },
  "max-tokens": {
    type: "number",
    default: DEFAULTS.maxTokens,
    describe: "longest accepted text, in whitespace tokens",
  },
  "max-batch": {
    type: "number",
    default: DEFAULTS.maxBatch,
    describe: "most texts accepted in one call",
  },
  stub: {
    type: "boolean",
    default: false,
    describe: "use the offline hash-derived backend instead of a model",
  },
  "stub-dimension": {
    type: "number",
    default: DEFAULTS.stubDimension,
    describe: "vector size in stub mode",
  },
} as const;

async function main(): Promise<void> {
  await yargs(hideBin(process.argv))
    .scriptName("sidecar")
    .command(
      "serve",
      "run the embedding HTTP service",
      (y) =>
        y.options(sharedOptions).options({
          host: { type: "string", default: DEFAULTS.host },
          port: { type: "number", default: DEFAULTS.port },
        } as const),
      async (argv) => {
        const config = resolveConfig({
          model: argv.model,
          pooling: argv.pooling,
          maxTokens: argv.maxTokens,
          maxBatch: argv.maxBatch,
          stub: argv.stub,
          stubDimension: argv.stubDimension,
          host: argv.host,
          port: argv.port,
        });
        const backend = await buildBackend(config);
        const app = buildApp(backend, config);
        app.listen(config.port, config.host, () => {
          console.log(
            `listening on http://${config.host}:${config.port}, ` +
              `model ${backend.modelId}, dimension ${backend.dimension}`,
          );
        });
      },
    )
    .command(
      "dump",
      "embed each line of a text file into a JSONL file",
      (y) =>
        y.options(sharedOptions).options({
          in: { type: "string", demandOption: true, describe: "input file, one text per line" },
          out: { type: "string", demandOption: true, describe: "output JSONL path" },
        } as const),
      async (argv) => {
        const config = resolveConfig({
          model: argv.model,
          pooling: argv.pooling,
          maxTokens: argv.maxTokens,
          maxBatch: argv.maxBatch,
          stub: argv.stub,
          stubDimension: argv.stubDimension,
        });
        const backend = await buildBackend(config);
        const count = await dumpEmbeddings(backend, config, argv.in, argv.out);
        console.log(`wrote ${count} embeddings to ${argv.out}`);
      },
    )
    .demandCommand(1, "pick a command: serve or dump")
    .strict()
    .help()
    .parseAsync();
}

main().catch((err: unknown) => {
  console.error(err instanceof Error ? err.message : String(err));
  process.exit(1);
});
