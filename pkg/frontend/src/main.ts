import fs from "node:fs";

import { createApp } from "./server.js";

function usage(): never {
  console.error(
    "usage: node dist/main.js --manifest review/candidates.jsonl --decisions decisions.jsonl --images OUT_DIR [--port 8321] [--reviewer NAME]",
  );
  process.exit(2);
}

function parseArgs(argv: string[]): Record<string, string> {
  const out: Record<string, string> = {};
  for (let i = 0; i < argv.length; i += 2) {
    const flag = argv[i];
    const value = argv[i + 1];
    if (!flag.startsWith("--") || value === undefined) usage();
    out[flag.slice(2)] = value;
  }
  return out;
}

const args = parseArgs(process.argv.slice(2));
if (!args.manifest || !args.decisions || !args.images) usage();
if (!fs.existsSync(args.manifest)) {
  console.error(`manifest not readable: ${args.manifest}`);
  process.exit(2);
}

const port = parseInt(args.port ?? "8321", 10);
let review;
try {
  review = createApp({
    manifestPath: args.manifest,
    decisionsPath: args.decisions,
    imagesRoot: args.images,
    reviewer: args.reviewer,
  });
} catch (err) {
  console.error(String(err instanceof Error ? err.message : err));
  process.exit(1);
}

const server = review.app.listen(port, () => {
  console.log(`review session: ${review.records.length} records on http://localhost:${port}/`);
});
server.on("error", (err: NodeJS.ErrnoException) => {
  if (err.code === "EADDRINUSE") {
    console.error(`port ${port} is busy`);
    process.exit(1);
  }
  throw err;
});
