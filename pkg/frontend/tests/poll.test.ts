import { describe, expect, it } from "vitest";

import { ApiClient } from "../src/api.js";
import { pollJob, MIN_POLL_INTERVAL_MS } from "../src/poll.js";
import { makeFakeService } from "./fakeService.js";

const instantSleep = () => Promise.resolve();

describe("pollJob", () => {
  it("stops as soon as the job reaches Done", async () => {
    const service = makeFakeService(3);
    const client = new ApiClient("", service.fetch);
    const job = await pollJob(client, "job1", { sleep: instantSleep });
    expect(job.state).toBe("Done");
    const pollCount = service.requests.filter((r) => r.url === "/api/query/job1").length;
    expect(pollCount).toBe(3);
  });

  it("reports progress on every poll", async () => {
    const service = makeFakeService(2);
    const client = new ApiClient("", service.fetch);
    const states: string[] = [];
    await pollJob(client, "job1", {
      sleep: instantSleep,
      onProgress: (view) => states.push(view.state),
    });
    expect(states).toEqual(["Running", "Done"]);
  });

  it("clamps the interval to at least 500 ms", async () => {
    const service = makeFakeService(2);
    const client = new ApiClient("", service.fetch);
    const sleeps: number[] = [];
    await pollJob(client, "job1", {
      intervalMs: 50,
      sleep: (ms) => {
        sleeps.push(ms);
        return Promise.resolve();
      },
    });
    expect(sleeps).toEqual([MIN_POLL_INTERVAL_MS]);
  });

  it("gives up after maxPolls", async () => {
    const service = makeFakeService(99);
    const client = new ApiClient("", service.fetch);
    await expect(
      pollJob(client, "job1", { sleep: instantSleep, maxPolls: 3 }),
    ).rejects.toThrow(/still running/);
  });
});
