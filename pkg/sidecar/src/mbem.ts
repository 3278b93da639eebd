// Binary embedding store (little-endian):
//   magic "MBEM", u32 version = 1, u32 dim, u64 count,
//   then per record: u16 id byte-length, id UTF-8 bytes, dim x f32.
// Records sorted by id ascending in byte order.

import { promises as fs } from "node:fs";
import path from "node:path";

export const MAGIC = "MBEM";
export const VERSION = 1;

export interface StoreRecord {
  id: string;
  vector: Float32Array;
}

export function encodeStore(dim: number, records: StoreRecord[]): Buffer {
  const sorted = [...records].sort((a, b) =>
    Buffer.compare(Buffer.from(a.id, "utf-8"), Buffer.from(b.id, "utf-8")),
  );
  const header = Buffer.alloc(20);
  header.write(MAGIC, 0, "ascii");
  header.writeUInt32LE(VERSION, 4);
  header.writeUInt32LE(dim, 8);
  header.writeBigUInt64LE(BigInt(sorted.length), 12);
  const parts: Buffer[] = [header];
  for (const record of sorted) {
    if (record.vector.length !== dim) {
      throw new Error(`vector for ${record.id} has dim ${record.vector.length}, expected ${dim}`);
    }
    const idBytes = Buffer.from(record.id, "utf-8");
    if (idBytes.length > 0xffff) {
      throw new Error(`id too long: ${record.id.slice(0, 40)}...`);
    }
    const lenBuf = Buffer.alloc(2);
    lenBuf.writeUInt16LE(idBytes.length, 0);
    const vecBuf = Buffer.alloc(dim * 4);
    for (let i = 0; i < dim; i += 1) {
      vecBuf.writeFloatLE(record.vector[i], i * 4);
    }
    parts.push(lenBuf, idBytes, vecBuf);
  }
  return Buffer.concat(parts);
}

export async function writeStore(
  filePath: string,
  dim: number,
  records: StoreRecord[],
): Promise<void> {
  const data = encodeStore(dim, records);
  const tmp = `${filePath}.tmp`;
  await fs.mkdir(path.dirname(path.resolve(filePath)), { recursive: true });
  await fs.writeFile(tmp, data);
  await fs.rename(tmp, filePath);
}

export interface LoadedStore {
  dim: number;
  records: StoreRecord[];
}

export function decodeStore(data: Buffer): LoadedStore {
  if (data.length < 20 || data.toString("ascii", 0, 4) !== MAGIC) {
    throw new Error("bad magic");
  }
  const version = data.readUInt32LE(4);
  if (version !== VERSION) {
    throw new Error(`unsupported version ${version}`);
  }
  const dim = data.readUInt32LE(8);
  const count = Number(data.readBigUInt64LE(12));
  const records: StoreRecord[] = [];
  let offset = 20;
  for (let row = 0; row < count; row += 1) {
    if (offset + 2 > data.length) throw new Error(`truncated at record ${row}`);
    const idLen = data.readUInt16LE(offset);
    offset += 2;
    if (offset + idLen + dim * 4 > data.length) throw new Error(`truncated at record ${row}`);
    const id = data.toString("utf-8", offset, offset + idLen);
    offset += idLen;
    const vector = new Float32Array(dim);
    for (let i = 0; i < dim; i += 1) {
      vector[i] = data.readFloatLE(offset + i * 4);
    }
    offset += dim * 4;
    records.push({ id, vector });
  }
  if (offset !== data.length) throw new Error("trailing bytes");
  return { dim, records };
}

export async function readStore(filePath: string): Promise<LoadedStore> {
  return decodeStore(await fs.readFile(filePath));
}
