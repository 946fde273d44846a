/**
 * One backing process per session, speaking line-delimited JSON over
 * stdio. Requests are answered strictly in order, so a FIFO of pending
 * promises is enough. Calls never block the event loop; concurrent
 * callers are queued onto the same pipe.
 */

import { spawn, type ChildProcessWithoutNullStreams } from "node:child_process";
import { createInterface, type Interface } from "node:readline";

import { TripleGakError } from "./errors.js";

export interface SessionOptions {
  /** Command used to start the backing process; the subcommand `bind`
   * is appended. Defaults to TRIPLEGAK_CMD or `python3 -m triplegak.cli`. */
  command?: string[];
}

function defaultCommand(): string[] {
  const fromEnv = process.env.TRIPLEGAK_CMD;
  if (fromEnv && fromEnv.trim()) return fromEnv.trim().split(/\s+/);
  return ["python3", "-m", "triplegak.cli"];
}

interface Pending {
  resolve: (value: unknown) => void;
  reject: (err: Error) => void;
}

export class Session {
  private child: ChildProcessWithoutNullStreams | null = null;
  private reader: Interface | null = null;
  private readonly pending: Pending[] = [];
  private readonly command: string[];

  constructor(options: SessionOptions = {}) {
    this.command = options.command ?? defaultCommand();
  }

  private ensureChild(): ChildProcessWithoutNullStreams {
    if (this.child) return this.child;
    const [cmd, ...args] = this.command;
    const child = spawn(cmd, [...args, "bind"], {
      stdio: ["pipe", "pipe", "pipe"],
    });
    child.stderr.resume(); // config echo; drained, not surfaced
    child.on("error", (err) => this.failAll(new TripleGakError("io-failure", err.message)));
    child.on("exit", (code) => {
      if (this.pending.length) {
        this.failAll(
          new TripleGakError("io-failure", `backing process exited with code ${code}`),
        );
      }
      this.child = null;
      this.reader = null;
    });
    this.reader = createInterface({ input: child.stdout });
    this.reader.on("line", (line) => this.handleLine(line));
    this.child = child;
    return child;
  }

  private handleLine(line: string): void {
    const next = this.pending.shift();
    if (!next) return;
    let parsed: { ok: boolean; value?: unknown; error?: { code: string; message: string } };
    try {
      parsed = JSON.parse(line);
    } catch (err) {
      next.reject(new TripleGakError("bad-response", `unparseable response: ${line}`));
      return;
    }
    if (parsed.ok) {
      next.resolve(parsed.value);
    } else {
      const code = parsed.error?.code ?? "internal-error";
      const message = parsed.error?.message ?? "unknown failure";
      next.reject(new TripleGakError(code, message));
    }
  }

  private failAll(err: Error): void {
    while (this.pending.length) {
      this.pending.shift()!.reject(err);
    }
  }

  call(request: Record<string, unknown>): Promise<unknown> {
    const child = this.ensureChild();
    return new Promise((resolve, reject) => {
      this.pending.push({ resolve, reject });
      child.stdin.write(JSON.stringify(request) + "\n", (err) => {
        if (err) {
          const idx = this.pending.findIndex((p) => p.resolve === resolve);
          if (idx >= 0) this.pending.splice(idx, 1);
          reject(new TripleGakError("io-failure", err.message));
        }
      });
    });
  }

  /** Close the backing process (idempotent). */
  close(): void {
    if (this.child) {
      this.child.stdin.end();
      this.child = null;
      this.reader = null;
    }
  }
}

let shared: Session | null = null;

/** Session used by the module-level functions; one per process. */
export function sharedSession(): Session {
  if (!shared) shared = new Session();
  return shared;
}

export function closeSharedSession(): void {
  if (shared) {
    shared.close();
    shared = null;
  }
}
