import { describe, expect, it } from "vitest";

import { ApiClient, ApiError } from "../src/api.js";
import { fakeFetch, makeState } from "./fakeServer.js";

describe("ApiClient", () => {
  it("lists topics with persisted selection state merged in", async () => {
    const state = makeState();
    state.selection["1"] = { selected: true, note: "keep", updated_at: "now" };
    const api = new ApiClient("", fakeFetch(state));
    const topics = await api.listTopics();
    expect(topics).toHaveLength(3);
    expect(topics.map((t) => t.topic_id)).toEqual([0, 1, 3]);
    expect(topics[1].selected).toBe(true);
    expect(topics[1].note).toBe("keep");
    expect(topics[0].selected).toBe(false);
  });

  it("raises ApiError with the server detail on 404", async () => {
    const api = new ApiClient("", fakeFetch(makeState()));
    await expect(api.getTopic(99)).rejects.toThrowError(ApiError);
    await expect(api.getTopic(99)).rejects.toThrowError("unknown topic 99");
  });

  it("encodes patent query parameters", async () => {
    const seen: string[] = [];
    const state = makeState();
    const inner = fakeFetch(state);
    const api = new ApiClient("", (input, init) => {
      seen.push(input);
      return inner(input, init);
    });
    await api.getPatents(3, { maxDistance: 0.25, limit: 10, offset: 20 });
    expect(seen[0]).toBe(
      "/api/v1/topics/3/patents?max_distance=0.25&limit=10&offset=20",
    );
  });

  it("patches selection and returns the stored entry", async () => {
    const state = makeState();
    const api = new ApiClient("", fakeFetch(state));
    const entry = await api.patchSelection(0, { selected: true });
    expect(entry.selected).toBe(true);
    expect(state.selection["0"].selected).toBe(true);
    const after = await api.patchSelection(0, { note: "solid cluster" });
    expect(after.selected).toBe(true);
    expect(after.note).toBe("solid cluster");
  });

  it("rejects an empty search with the server's 400 detail", async () => {
    const api = new ApiClient("", fakeFetch(makeState()));
    await expect(api.runSearch({})).rejects.toThrowError(/no topics selected/);
  });
});
