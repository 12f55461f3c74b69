// Test utilities: a seeded PRNG and direct CLI invocation that bypasses
// the library (the parity baseline must not go through the bindings).

import { spawnSync } from 'node:child_process';
import * as fs from 'node:fs';
import * as os from 'node:os';
import * as path from 'node:path';

export const CLI = process.env.ECG_BYTE_CLI ?? 'ecg-byte';

export function mulberry32(seed: number): () => number {
  let a = seed >>> 0;
  return () => {
    a = (a + 0x6d2b79f5) | 0;
    let t = Math.imul(a ^ (a >>> 15), 1 | a);
    t = (t + Math.imul(t ^ (t >>> 7), 61 | t)) ^ t;
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}

export function randomSymbols(rand: () => number, length: number,
  alphabet = 26): Uint8Array {
  const bytes = new Uint8Array(length);
  for (let i = 0; i < length; i += 1) {
    bytes[i] = 97 + Math.floor(rand() * alphabet);
  }
  return bytes;
}

export function makeTempDir(): string {
  return fs.mkdtempSync(path.join(os.tmpdir(), 'ecg_byte-test-'));
}

/** Run the core CLI directly; returns stdout, throws on nonzero exit. */
export function runCliDirect(args: string[]): string {
  const result = spawnSync(CLI, args, {
    encoding: 'utf-8',
    maxBuffer: 256 * 1024 * 1024,
  });
  if (result.status !== 0) {
    throw new Error(`direct CLI call failed: ${result.stderr}`);
  }
  return result.stdout;
}

/** Encode symbol sequences via a direct CLI call, no library involved. */
export function encodeDirect(tokenizer: string, batch: Uint8Array[]): number[][] {
  const dir = makeTempDir();
  try {
    const inDir = path.join(dir, 'in');
    fs.mkdirSync(inDir);
    batch.forEach((symbols, index) => {
      fs.writeFileSync(
        path.join(inDir, `${String(index).padStart(6, '0')}.sym`), symbols);
    });
    const out = path.join(dir, 'ids.txt');
    runCliDirect(['encode', '--tokenizer', tokenizer, '--in', inDir, '--out', out]);
    const text = fs.readFileSync(out, 'utf-8');
    const body = text.endsWith('\n') ? text.slice(0, -1) : text;
    return body.split('\n').map((line) =>
      line.length === 0 ? [] : line.split(' ').map((t) => Number.parseInt(t, 10)));
  } finally {
    fs.rmSync(dir, { recursive: true, force: true });
  }
}

/** Decode id sequences via a direct CLI call, no library involved. */
export function decodeDirect(tokenizer: string, batch: number[][]): Uint8Array[] {
  const dir = makeTempDir();
  try {
    const idsFile = path.join(dir, 'ids.txt');
    fs.writeFileSync(idsFile, batch.map((ids) => ids.join(' ')).join('\n') + '\n');
    const outDir = path.join(dir, 'out');
    runCliDirect(['decode', '--tokenizer', tokenizer, '--in', idsFile,
      '--raw', '--out', outDir]);
    return batch.map((_, index) => new Uint8Array(fs.readFileSync(
      path.join(outDir, `record_${String(index).padStart(5, '0')}.sym`))));
  } finally {
    fs.rmSync(dir, { recursive: true, force: true });
  }
}
