import express from "express";
import { z } from "zod";

import type { EmbedBackend } from "./backend.js";
import type { SidecarConfig } from "./config.js";

const embedRequest = z.object({
  texts: z.array(z.string()),
});

export function countTokens(text: string): number {
  return text.split(/\s+/).filter(Boolean).length;
}

export function buildApp(backend: EmbedBackend, config: SidecarConfig): express.Express {
  const app = express();
  app.use(express.json({ limit: "8mb" }));

  app.get("/health", (_req, res) => {
    res.json({ status: "ok", model: backend.modelId, dimension: backend.dimension });
  });

  app.post("/embed", async (req, res, next) => {
    try {
      const parsed = embedRequest.safeParse(req.body);
      if (!parsed.success) {
        res.status(400).json({ error: "body must be an object with a texts array of strings" });
        return;
      }
      const { texts } = parsed.data;
      if (texts.length === 0) {
        res.status(400).json({ error: "texts must not be empty" });
        return;
      }
      if (texts.length > config.maxBatch) {
        res.status(413).json({ error: `batch of ${texts.length} exceeds the limit of ${config.maxBatch}` });
        return;
      }
      const over = texts.findIndex((text) => countTokens(text) > config.maxTokens);
      if (over !== -1) {
        res.status(400).json({ error: `texts[${over}] is longer than ${config.maxTokens} tokens` });
        return;
      }
      const vectors = await backend.embed(texts);
      res.json({ vectors, dimension: backend.dimension });
    } catch (err) {
      next(err);
    }
  });

  app.use((_req, res) => {
    res.status(404).json({ error: "not found" });
  });

  // Body-parser failures land here with a status already set: malformed
  // JSON carries 400, an over-limit payload carries 413. Anything without
  // a status is a backend failure.
  app.use(
    (err: Error & { status?: number }, _req: express.Request, res: express.Response, _next: express.NextFunction) => {
      const status = typeof err.status === "number" && err.status >= 400 && err.status < 600 ? err.status : 500;
      res.status(status).json({ error: err.message });
    },
  );

  return app;
}
