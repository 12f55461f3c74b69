// Node bindings for the ecg-byte toolkit.
//
// Every operation shells out to the `ecg-byte` CLI and exchanges data
// through its documented file formats (raw `.sym` symbol bytes, text id
// streams, spans JSONL, key=value parameter files, CSV records, and the
// `ecg-byte v1` tokenizer file). No algorithm is re-implemented here, so
// results are byte-for-byte identical to the core by construction.

import { spawnSync } from 'node:child_process';
import * as fs from 'node:fs';
import * as os from 'node:os';
import * as path from 'node:path';

/** CLI entry point; override with ECG_BYTE_CLI for non-PATH installs. */
const CLI = process.env.ECG_BYTE_CLI ?? 'ecg-byte';

const TOKENIZER_HEADER = 'ecg-byte v1';

/** Error raised by the core, carrying its machine-parsable code. */
export class CoreError extends Error {
  readonly code: string;

  constructor(code: string, message: string) {
    super(`${code}: ${message}`);
    this.name = 'CoreError';
    this.code = code;
  }
}

export interface TokenSpan {
  id: number;
  start: number;
  len: number;
}

export interface QuantizeParams {
  p1: number;
  p99: number;
  eps1?: number;
  eps2?: number;
  alphabetSize?: number;
}

function runCore(args: string[]): void {
  const result = spawnSync(CLI, args, {
    encoding: 'utf-8',
    maxBuffer: 256 * 1024 * 1024,
  });
  if (result.error) {
    throw new CoreError('E_IO', `cannot run ${CLI}: ${result.error.message}`);
  }
  if (result.status !== 0) {
    const line = (result.stderr ?? '').split('\n', 1)[0];
    const match = /^(E_[A-Z_]+): (.*)$/.exec(line);
    if (match) {
      throw new CoreError(match[1], match[2]);
    }
    throw new CoreError('E_INTERNAL', line || `exit status ${result.status}`);
  }
}

function withTempDir<T>(fn: (dir: string) => T): T {
  const dir = fs.mkdtempSync(path.join(os.tmpdir(), 'ecg_byte-'));
  try {
    return fn(dir);
  } finally {
    fs.rmSync(dir, { recursive: true, force: true });
  }
}

function parseIdLine(line: string): number[] {
  if (line.length === 0) {
    return [];
  }
  return line.split(' ').map((tok) => Number.parseInt(tok, 10));
}

function readIdLines(file: string): number[][] {
  const text = fs.readFileSync(file, 'utf-8');
  const body = text.endsWith('\n') ? text.slice(0, -1) : text;
  if (body.length === 0 && !text.includes('\n')) {
    return [];
  }
  return body.split('\n').map(parseIdLine);
}

function writeSymbolBatch(dir: string, batch: Uint8Array[]): void {
  batch.forEach((symbols, index) => {
    const name = `${String(index).padStart(6, '0')}.sym`;
    fs.writeFileSync(path.join(dir, name), symbols);
  });
}

/** Handle over a trained tokenizer file; immutable once loaded. */
export class Tokenizer {
  private constructor(
    readonly path: string,
    readonly numMerges: number,
    readonly alphabetSize: number,
  ) {}

  /**
   * Open and validate a tokenizer file.
   *
   * Validation is delegated to the core (a zero-length encode), so
   * malformed files raise exactly the core's error codes.
   */
  static load(tokenizerPath: string): Tokenizer {
    withTempDir((dir) => {
      const inDir = path.join(dir, 'in');
      fs.mkdirSync(inDir);
      fs.writeFileSync(path.join(inDir, 'probe.sym'), Buffer.alloc(0));
      runCore(['encode', '--tokenizer', tokenizerPath,
        '--in', inDir, '--out', path.join(dir, 'probe.txt')]);
    });
    // metadata comes from the (already validated) documented header
    const lines = fs.readFileSync(tokenizerPath, 'utf-8').split('\n');
    const alphabetSize = Number.parseInt(lines[1].split(' ')[1], 10);
    const numMerges = Number.parseInt(lines[2].split(' ')[1], 10);
    return new Tokenizer(tokenizerPath, numMerges, alphabetSize);
  }

  /** Encode one symbol sequence into token ids. */
  encode(symbols: Uint8Array): number[] {
    return this.encodeBatch([symbols])[0];
  }

  /** Encode many sequences in one core invocation, order preserved. */
  encodeBatch(batch: Uint8Array[]): number[][] {
    if (batch.length === 0) {
      return [];
    }
    return withTempDir((dir) => {
      const inDir = path.join(dir, 'in');
      fs.mkdirSync(inDir);
      writeSymbolBatch(inDir, batch);
      const out = path.join(dir, 'ids.txt');
      runCore(['encode', '--tokenizer', this.path, '--in', inDir, '--out', out]);
      return readIdLines(out);
    });
  }

  /** Encode one sequence and report each token's symbol span. */
  encodeWithSpans(symbols: Uint8Array): { ids: number[]; spans: TokenSpan[] } {
    return withTempDir((dir) => {
      const inDir = path.join(dir, 'in');
      fs.mkdirSync(inDir);
      writeSymbolBatch(inDir, [symbols]);
      const out = path.join(dir, 'ids.txt');
      runCore(['encode', '--tokenizer', this.path, '--in', inDir,
        '--out', out, '--spans']);
      const ids = readIdLines(out)[0];
      const spans = fs.readFileSync(`${out}.spans.jsonl`, 'utf-8')
        .split('\n')
        .filter((line) => line.length > 0)
        .map((line) => JSON.parse(line) as TokenSpan & { record: number })
        .filter((span) => span.record === 0)
        .map(({ id, start, len }) => ({ id, start, len }));
      return { ids, spans };
    });
  }

  /** Expand token ids back into symbol bytes. */
  decode(ids: number[]): Uint8Array {
    return this.decodeBatch([ids])[0];
  }

  /** Decode many id sequences in one core invocation, order preserved. */
  decodeBatch(batch: number[][]): Uint8Array[] {
    if (batch.length === 0) {
      return [];
    }
    return withTempDir((dir) => {
      const idsFile = path.join(dir, 'ids.txt');
      fs.writeFileSync(idsFile,
        batch.map((ids) => ids.join(' ')).join('\n') + '\n');
      const outDir = path.join(dir, 'out');
      runCore(['decode', '--tokenizer', this.path, '--in', idsFile,
        '--raw', '--out', outDir]);
      return batch.map((_, index) => {
        const name = `record_${String(index).padStart(5, '0')}.sym`;
        return new Uint8Array(fs.readFileSync(path.join(outDir, name)));
      });
    });
  }
}

/**
 * Train a tokenizer on a raw symbol corpus file.
 *
 * Returns the tokenizer file path (canonical `ecg-byte v1` text format).
 */
export function train(
  corpusPath: string,
  numMerges: number,
  outPath: string,
  alphabetSize = 26,
): string {
  runCore(['train', '--corpus', corpusPath, '--num-merges', String(numMerges),
    '--alphabet-size', String(alphabetSize), '--out', outPath]);
  return outPath;
}

function paramsFileText(params: QuantizeParams): string {
  const eps1 = params.eps1 ?? 0.5;
  const eps2 = params.eps2 ?? 1e-6;
  const alphabet = params.alphabetSize ?? 26;
  return [
    `p1=${params.p1}`,
    `p99=${params.p99}`,
    `eps1=${eps1}`,
    `eps2=${eps2}`,
    `alphabet_size=${alphabet}`,
  ].join('\n') + '\n';
}

/**
 * Quantize a lead-major record matrix into symbol bytes.
 *
 * Runs the core's quantizer by encoding the record with a merge-free
 * tokenizer: with zero merges every symbol is its own token id, so the
 * id stream is exactly the symbol stream.
 */
export function quantize(record: number[][], params: QuantizeParams): Uint8Array {
  if (record.length === 0 || record[0].length === 0) {
    throw new CoreError('E_DIMENSION', 'record matrix must be non-empty');
  }
  const width = record[0].length;
  if (record.some((row) => row.length !== width)) {
    throw new CoreError('E_DIMENSION', 'record matrix rows differ in length');
  }
  const alphabet = params.alphabetSize ?? 26;
  return withTempDir((dir) => {
    const inDir = path.join(dir, 'in');
    fs.mkdirSync(inDir);
    const header = record.map((_, lead) => `L${lead}`).join(',');
    const rows: string[] = [header];
    for (let t = 0; t < width; t += 1) {
      rows.push(record.map((row) => String(row[t])).join(','));
    }
    fs.writeFileSync(path.join(inDir, 'record.csv'), rows.join('\n') + '\n');
    const paramsFile = path.join(dir, 'params.txt');
    fs.writeFileSync(paramsFile, paramsFileText(params));
    const baseTok = path.join(dir, 'base.ecgbyte');
    fs.writeFileSync(baseTok,
      `${TOKENIZER_HEADER}\nalphabet_size ${alphabet}\nnum_merges 0\n`);
    const out = path.join(dir, 'ids.txt');
    runCore(['encode', '--tokenizer', baseTok, '--in', inDir,
      '--percentiles', paramsFile, '--out', out]);
    return Uint8Array.from(readIdLines(out)[0]);
  });
}
