/** Spawning the radnoise CLI and scratch-directory plumbing. */

import { spawnSync } from "node:child_process";
import { mkdtempSync, rmSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";

export interface CliOptions {
  /** Path to the radnoise executable; defaults to "radnoise" on PATH. */
  cli?: string;
}

export function runCli(args: string[], options?: CliOptions): void {
  const cli = options?.cli ?? "radnoise";
  const result = spawnSync(cli, args, { stdio: ["ignore", "pipe", "pipe"] });
  if (result.error) {
    throw new Error(
      `failed to launch ${cli}: ${result.error.message} ` +
        "(is the radnoise package installed and on PATH?)",
    );
  }
  if (result.status !== 0) {
    const stderr = result.stderr?.toString("utf-8").trim() ?? "";
    throw new Error(`${cli} ${args[0]} exited with status ${result.status}: ${stderr}`);
  }
}

export function withTempDir<T>(fn: (dir: string) => T): T {
  const dir = mkdtempSync(join(tmpdir(), "noiseforge-"));
  try {
    return fn(dir);
  } finally {
    rmSync(dir, { recursive: true, force: true });
  }
}
