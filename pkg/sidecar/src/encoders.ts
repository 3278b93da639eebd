// Encoder registry. The default is the pretrained MiniLM sentence encoder
// (384-dim) loaded through @xenova/transformers; `hashed` is a fully
// offline deterministic stand-in used by the test suite and available for
// air-gapped smoke runs.

export interface Encoder {
  id: string;
  version: string;
  dim: number;
  encode(texts: string[]): Promise<Float32Array[]>;
}

const MASK64 = (1n << 64n) - 1n;
const FNV_OFFSET = 0xcbf29ce484222325n;
const FNV_PRIME = 0x100000001b3n;

function fnv64(text: string): bigint {
  const bytes = Buffer.from(text, "utf-8");
  let h = FNV_OFFSET;
  for (const b of bytes) {
    h = ((h ^ BigInt(b)) * FNV_PRIME) & MASK64;
  }
  return h;
}

function splitmix64(x: bigint): bigint {
  x = (x + 0x9e3779b97f4a7c15n) & MASK64;
  x = ((x ^ (x >> 30n)) * 0xbf58476d1ce4e5b9n) & MASK64;
  x = ((x ^ (x >> 27n)) * 0x94d049bb133111ebn) & MASK64;
  return x ^ (x >> 31n);
}

const TOKEN_RE = /[\p{L}\p{N}_]+/gu;

function l2Normalize(values: Float64Array): Float32Array {
  let sum = 0;
  for (const v of values) sum += v * v;
  const out = new Float32Array(values.length);
  if (sum === 0) {
    out[0] = 1.0;
    return out;
  }
  const norm = Math.sqrt(sum);
  for (let i = 0; i < values.length; i += 1) out[i] = values[i] / norm;
  // second pass in f32 keeps the stored norm within float tolerance
  let sum32 = 0;
  for (const v of out) sum32 += v * v;
  const norm32 = Math.sqrt(sum32);
  for (let i = 0; i < out.length; i += 1) out[i] /= norm32;
  return out;
}

export function hashedEncoder(dim = 384, seed = 0): Encoder {
  if (dim < 2) throw new Error("dim must be >= 2");
  const seedMix = splitmix64(BigInt(seed) & MASK64);
  return {
    id: "hashed",
    version: `hashed-v1-d${dim}-s${seed}`,
    dim,
    async encode(texts: string[]): Promise<Float32Array[]> {
      return texts.map((text) => {
        const tokens = (text.toLowerCase().match(TOKEN_RE) ?? []) as string[];
        const acc = new Float64Array(dim);
        if (tokens.length === 0) {
          acc[0] = 1.0;
          return l2Normalize(acc);
        }
        const hashes = tokens.map(fnv64);
        const grams: bigint[] = [...hashes];
        for (let i = 0; i + 1 < hashes.length; i += 1) {
          let h = FNV_OFFSET;
          h = ((h ^ hashes[i]) * FNV_PRIME) & MASK64;
          h = ((h ^ hashes[i + 1]) * FNV_PRIME) & MASK64;
          grams.push(h);
        }
        for (const gram of grams) {
          const mixed = splitmix64(gram ^ seedMix);
          const index = Number(mixed % BigInt(dim));
          acc[index] += mixed >> 63n === 0n ? 1.0 : -1.0;
        }
        return l2Normalize(acc);
      });
    },
  };
}

const MINILM_ID = "Xenova/all-MiniLM-L6-v2";

export async function minilmEncoder(modelId: string = MINILM_ID): Promise<Encoder> {
  // The runtime is an optional dependency; keep the specifier dynamic so
  // compilation does not require it to be installed.
  const moduleId = "@xenova/transformers";
  let pipeline: (task: string, model: string) => Promise<any>;
  let env: { allowLocalModels: boolean };
  try {
    ({ pipeline, env } = await import(moduleId));
  } catch (err) {
    throw new Error(`encoder runtime not installed (${moduleId}): ${err}`);
  }
  env.allowLocalModels = true;
  const extractor = await pipeline("feature-extraction", modelId);
  return {
    id: modelId,
    version: `transformers.js:${modelId}`,
    dim: 384,
    async encode(texts: string[]): Promise<Float32Array[]> {
      const out: Float32Array[] = [];
      for (const text of texts) {
        const tensor = await extractor(text, { pooling: "mean", normalize: true });
        out.push(Float32Array.from(tensor.data as Float32Array));
      }
      return out;
    },
  };
}

export async function resolveEncoder(name: string, dim: number, seed: number): Promise<Encoder> {
  if (name === "hashed") {
    return hashedEncoder(dim, seed);
  }
  return minilmEncoder(name === "minilm" ? undefined : name);
}
