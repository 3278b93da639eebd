#!/usr/bin/env node
// embed --posts posts.jsonl --out embeddings.mbem [--batch 256]
//       [--encoder Xenova/all-MiniLM-L6-v2 | hashed] [--dim 384] [--seed 0]
//       [--device cpu]
// Exit 0 on success, 1 on any failure.

import { promises as fs } from "node:fs";
import path from "node:path";

import { composePostText } from "./compose.js";
import { resolveEncoder } from "./encoders.js";
import { writeStore, StoreRecord } from "./mbem.js";

interface Args {
  posts: string;
  out: string;
  batch: number;
  encoder: string;
  dim: number;
  seed: number;
  device: string;
}

const DEFAULT_ENCODER = "Xenova/all-MiniLM-L6-v2";

function parseArgs(argv: string[]): Args {
  const args: Args = {
    posts: "",
    out: "",
    batch: 256,
    encoder: DEFAULT_ENCODER,
    dim: 384,
    seed: 0,
    device: "cpu",
  };
  for (let i = 0; i < argv.length; i += 2) {
    const flag = argv[i];
    const value = argv[i + 1];
    if (value === undefined) throw new Error(`missing value for ${flag}`);
    switch (flag) {
      case "--posts":
        args.posts = value;
        break;
      case "--out":
        args.out = value;
        break;
      case "--batch":
        args.batch = Number.parseInt(value, 10);
        break;
      case "--encoder":
        args.encoder = value;
        break;
      case "--dim":
        args.dim = Number.parseInt(value, 10);
        break;
      case "--seed":
        args.seed = Number.parseInt(value, 10);
        break;
      case "--device":
        args.device = value;
        break;
      default:
        throw new Error(`unknown flag: ${flag}`);
    }
  }
  if (!args.posts || !args.out) throw new Error("--posts and --out are required");
  if (!Number.isFinite(args.batch) || args.batch < 1) throw new Error("--batch must be >= 1");
  return args;
}

interface PostLine {
  id: string;
  title: string;
  content: string;
}

function parsePosts(raw: string, source: string): PostLine[] {
  const posts: PostLine[] = [];
  const seen = new Set<string>();
  const lines = raw.split("\n");
  for (let lineno = 0; lineno < lines.length; lineno += 1) {
    const line = lines[lineno].trim();
    if (!line) continue;
    let obj: Record<string, unknown>;
    try {
      obj = JSON.parse(line);
    } catch {
      throw new Error(`${source}:${lineno + 1}: not valid JSON`);
    }
    const id = obj.id;
    const content = obj.content;
    const title = obj.title ?? "";
    if (typeof id !== "string" || !id) throw new Error(`${source}:${lineno + 1}: bad id`);
    if (typeof content !== "string") throw new Error(`${source}:${lineno + 1}: bad content`);
    if (typeof title !== "string") throw new Error(`${source}:${lineno + 1}: bad title`);
    if (seen.has(id)) throw new Error(`${source}:${lineno + 1}: duplicate id ${id}`);
    seen.add(id);
    posts.push({ id, title, content });
  }
  return posts;
}

export async function embedCorpus(args: Args): Promise<number> {
  const raw = await fs.readFile(args.posts, "utf-8");
  const posts = parsePosts(raw, args.posts);
  const encoder = await resolveEncoder(args.encoder, args.dim, args.seed);

  const records: StoreRecord[] = [];
  for (let start = 0; start < posts.length; start += args.batch) {
    const batch = posts.slice(start, start + args.batch);
    const vectors = await encoder.encode(
      batch.map((p) => composePostText(p.title, p.content)),
    );
    for (let i = 0; i < batch.length; i += 1) {
      records.push({ id: batch[i].id, vector: vectors[i] });
    }
  }
  await writeStore(args.out, encoder.dim, records);

  const manifest = {
    command: "embed",
    encoder: { id: encoder.id, version: encoder.version, dim: encoder.dim },
    inputs: { posts: path.resolve(args.posts) },
    records: records.length,
  };
  const manifestPath = `${args.out}.manifest.json`;
  await fs.writeFile(`${manifestPath}.tmp`, `${JSON.stringify(manifest, null, 2)}\n`);
  await fs.rename(`${manifestPath}.tmp`, manifestPath);
  return records.length;
}

export async function main(argv: string[]): Promise<number> {
  let args: Args;
  try {
    args = parseArgs(argv);
  } catch (err) {
    console.error(`usage error: ${err instanceof Error ? err.message : err}`);
    return 1;
  }
  try {
    const count = await embedCorpus(args);
    console.error(`wrote ${count} records to ${args.out}`);
    return 0;
  } catch (err) {
    console.error(`embed failed: ${err instanceof Error ? err.message : err}`);
    return 1;
  }
}

const entry = process.argv[1] ? path.resolve(process.argv[1]) : "";
if (import.meta.url === `file://${entry}`) {
  main(process.argv.slice(2)).then((code) => {
    process.exitCode = code;
  });
}
