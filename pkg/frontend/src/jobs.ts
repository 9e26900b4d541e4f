/** Search-job pane: submit a run over the selected topics and poll it.
 *
 * The server queues one job at a time; this pane just submits and
 * polls GET /jobs/{id} until a terminal state, rendering progress and,
 * on completion, the match count reported by the job itself.
 */

import { ApiClient, JobStatus } from "./api.js";
import { el } from "./dom.js";

const DEFAULT_POLL_MS = 500;

export interface JobsHandle {
  run(): Promise<JobStatus>;
  readonly lastJob: JobStatus | null;
}

export function mountJobs(
  container: HTMLElement,
  api: ApiClient,
  onComplete: () => void,
  pollMs: number = DEFAULT_POLL_MS,
): JobsHandle {
  let lastJob: JobStatus | null = null;
  let running = false;

  const button = el("button", { class: "run-search" }, ["run search"]);
  const status = el("span", { class: "job-status" }, ["idle"]);
  const bar = el("progress", { class: "job-progress", max: "1", value: "0" });
  container.append(el("div", { class: "job-controls" }, [button, bar, status]));

  function render(job: JobStatus | null, message?: string): void {
    if (message !== undefined) {
      status.textContent = message;
      return;
    }
    if (job === null) return;
    bar.value = job.progress;
    if (job.state === "completed") {
      const matches = job.counts["matches"] ?? 0;
      status.textContent = `completed: ${matches} matches`;
    } else if (job.state === "failed") {
      status.textContent = `failed: ${job.error ?? "unknown error"}`;
    } else {
      status.textContent = job.state;
    }
  }

  const sleep = (ms: number) => new Promise((resolve) => setTimeout(resolve, ms));

  async function poll(jobId: string): Promise<JobStatus> {
    for (;;) {
      const job = await api.getJob(jobId);
      lastJob = job;
      render(job);
      if (job.state === "completed" || job.state === "failed") {
        return job;
      }
      await sleep(pollMs);
    }
  }

  async function run(): Promise<JobStatus> {
    if (running) throw new Error("a job is already running");
    running = true;
    button.disabled = true;
    bar.value = 0;
    render(null, "submitting");
    try {
      const { job_id } = await api.runSearch({});
      const job = await poll(job_id);
      if (job.state === "completed") {
        onComplete();
      }
      return job;
    } catch (error) {
      render(null, `error: ${error instanceof Error ? error.message : error}`);
      throw error;
    } finally {
      running = false;
      button.disabled = false;
    }
  }

  button.addEventListener("click", () => {
    void run().catch(() => {
      // rendered above; keep the pane alive
    });
  });

  return {
    run,
    get lastJob() {
      return lastJob;
    },
  };
}
