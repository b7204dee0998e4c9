// Job polling: one in-flight poll per job, never faster than every 500 ms,
// stops as soon as the job reaches Done or Failed.

import type { ApiClient } from "./api.js";
import type { JobView } from "./model.js";

export const MIN_POLL_INTERVAL_MS = 500;

export interface PollOptions {
  intervalMs?: number;
  maxPolls?: number;
  sleep?: (ms: number) => Promise<void>;
  onProgress?: (job: JobView) => void;
}

const realSleep = (ms: number) => new Promise<void>((resolve) => setTimeout(resolve, ms));

export async function pollJob(
  client: ApiClient,
  jobId: string,
  options: PollOptions = {},
): Promise<JobView> {
  const interval = Math.max(options.intervalMs ?? MIN_POLL_INTERVAL_MS, MIN_POLL_INTERVAL_MS);
  const maxPolls = options.maxPolls ?? 600;
  const sleep = options.sleep ?? realSleep;
  for (let i = 0; i < maxPolls; i++) {
    const job = await client.getJob(jobId);
    options.onProgress?.(job);
    if (job.state === "Done" || job.state === "Failed") {
      return job;
    }
    await sleep(interval);
  }
  throw new Error(`job ${jobId} still running after ${maxPolls} polls`);
}
