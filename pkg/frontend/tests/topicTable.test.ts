import { beforeEach, describe, expect, it } from "vitest";

import { ApiClient } from "../src/api.js";
import { bootstrap } from "../src/main.js";
import { fakeFetch, makeState } from "./fakeServer.js";

const flush = () => new Promise<void>((resolve) => setTimeout(resolve, 0));

async function settle(): Promise<void> {
  for (let i = 0; i < 5; i++) await flush();
}

describe("topic table", () => {
  let state: ReturnType<typeof makeState>;

  beforeEach(() => {
    document.body.innerHTML = '<div id="app"></div>';
    state = makeState();
  });

  function boot(): ReturnType<typeof bootstrap> {
    const root = document.getElementById("app");
    if (root === null) throw new Error("no app root");
    const app = bootstrap(root, new ApiClient("", fakeFetch(state)));
    return app;
  }

  it("renders one row per topic returned by the API", async () => {
    const app = boot();
    await app.refreshAll();
    const rows = document.querySelectorAll("#topic-table tbody tr");
    const fromApi = await new ApiClient("", fakeFetch(state)).listTopics();
    expect(rows.length).toBe(fromApi.length);
    expect(rows.length).toBe(3);
    const ids = [...rows].map((r) => r.getAttribute("data-topic"));
    expect(ids).toEqual(["0", "1", "3"]);
  });

  it("shows a keyword preview and size per row", async () => {
    const app = boot();
    await app.refreshAll();
    const first = document.querySelector('#topic-table tr[data-topic="0"]');
    expect(first?.querySelector(".keywords")?.textContent).toContain(
      "spiking network",
    );
    expect(first?.textContent).toContain("120");
  });

  it("persists a selection across an app reload", async () => {
    const app = boot();
    await app.refreshAll();
    const checkbox = document.querySelector<HTMLInputElement>(
      'input[data-topic="1"]',
    );
    expect(checkbox).not.toBeNull();
    expect(checkbox!.checked).toBe(false);

    checkbox!.click();
    await settle();
    expect(state.selection["1"].selected).toBe(true);

    // fresh bootstrap over the same server state = page reload
    document.body.innerHTML = '<div id="app"></div>';
    const reloaded = boot();
    await reloaded.refreshAll();
    const again = document.querySelector<HTMLInputElement>(
      'input[data-topic="1"]',
    );
    expect(again!.checked).toBe(true);
    const others = document.querySelectorAll<HTMLInputElement>(
      'input[type="checkbox"]:checked',
    );
    expect(others.length).toBe(1);
  });

  it("reverts the checkbox when the server refuses the patch", async () => {
    state.topics = state.topics.slice(0, 1);
    const app = boot();
    await app.refreshAll();
    // drop the topic server-side after render so the PATCH 404s
    state.topics = [];
    const checkbox = document.querySelector<HTMLInputElement>(
      'input[data-topic="0"]',
    );
    checkbox!.click();
    await settle();
    expect(checkbox!.checked).toBe(false);
    expect(state.selection["0"]).toBeUndefined();
  });
});
