import { spawn, ChildProcessWithoutNullStreams } from 'node:child_process';
import { createInterface } from 'node:readline';
import { dirname, join } from 'node:path';
import { fileURLToPath } from 'node:url';

export const ADAPTER_DIR = join(dirname(fileURLToPath(import.meta.url)), '..');
export const MAIN = join(ADAPTER_DIR, 'dist', 'main.js');

export interface ServerHandle {
  proc: ChildProcessWithoutNullStreams;
  /** resolved lines from stdout in arrival order */
  next(): Promise<string | null>;
  send(obj: unknown): void;
  sendRaw(line: string): void;
  close(): Promise<number | null>;
}

export function startServer(args: string[]): ServerHandle {
  const proc = spawn('node', [MAIN, ...args], { stdio: ['pipe', 'pipe', 'pipe'] });
  const queue: string[] = [];
  const waiters: Array<(line: string | null) => void> = [];
  let ended = false;

  const rl = createInterface({ input: proc.stdout });
  rl.on('line', (line) => {
    const waiter = waiters.shift();
    if (waiter) waiter(line);
    else queue.push(line);
  });
  rl.on('close', () => {
    ended = true;
    while (waiters.length) waiters.shift()!(null);
  });

  return {
    proc,
    next() {
      if (queue.length) return Promise.resolve(queue.shift()!);
      if (ended) return Promise.resolve(null);
      return new Promise((resolve) => waiters.push(resolve));
    },
    send(obj) {
      proc.stdin.write(JSON.stringify(obj) + '\n');
    },
    sendRaw(line) {
      proc.stdin.write(line + '\n');
    },
    close() {
      proc.stdin.end();
      return new Promise((resolve) => proc.on('exit', resolve));
    },
  };
}

export function makeTrace(phase: number): number[] {
  return Array.from({ length: 64 }, (_, i) =>
    Math.max(0, 0.02 + 0.2 * Math.sin((i + phase) / 10) ** 2),
  );
}

export function makeRequest(overrides: Record<string, unknown> = {}): Record<string, unknown> {
  return {
    id: 1,
    subject_id: 'subj',
    context: Array.from({ length: 8 }, (_, d) => makeTrace(d)),
    context_dirs: [0, 1, 2, 3, 4, 5, 6, 7],
    targets: Array.from({ length: 8 }, (_, d) => ({ dir: d, count: 1 })),
    pool_size: 4,
    seed: 21,
    ...overrides,
  };
}

export function rms(a: number[], b: number[]): number {
  let sum = 0;
  for (let i = 0; i < a.length; i++) sum += (a[i] - b[i]) ** 2;
  return Math.sqrt(sum / a.length);
}
