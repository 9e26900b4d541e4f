/** Matched-patent pane: paginated table with a max-distance slider.
 *
 * Filtering happens server-side via the max_distance query parameter;
 * the slider value is sent verbatim, so dragging it to 0 asks the API
 * for matches at distance <= 0 and legitimately empties the table.
 */

import { ApiClient } from "./api.js";
import { clear, el, fmtDistance } from "./dom.js";

const PAGE_SIZE = 25;
const SLIDER_MAX = 2.0;
const SLIDER_STEP = 0.01;

export interface PatentsHandle {
  show(topicId: number): Promise<void>;
  refresh(): Promise<void>;
}

export function mountPatents(container: HTMLElement, api: ApiClient): PatentsHandle {
  let topicId: number | null = null;
  let offset = 0;
  let total = 0;

  const slider = el("input", {
    type: "range",
    min: "0",
    max: String(SLIDER_MAX),
    step: String(SLIDER_STEP),
    value: String(SLIDER_MAX),
    class: "distance-slider",
  });
  const sliderLabel = el("span", { class: "slider-value" }, [
    fmtDistance(SLIDER_MAX),
  ]);
  const totalLabel = el("span", { class: "patent-total" }, ["no topic"]);
  const prev = el("button", { class: "page-prev" }, ["prev"]);
  const next = el("button", { class: "page-next" }, ["next"]);
  const body = el("tbody");

  container.append(
    el("div", { class: "patent-controls" }, [
      el("label", {}, ["max distance ", slider, sliderLabel]),
      totalLabel,
      prev,
      next,
    ]),
    el("table", { class: "patent-table" }, [
      el("thead", {}, [
        el("tr", {}, [
          el("th", {}, ["patent"]),
          el("th", {}, ["distance"]),
          el("th", {}, ["hits"]),
        ]),
      ]),
      body,
    ]),
  );

  async function load(): Promise<void> {
    if (topicId === null) return;
    const page = await api.getPatents(topicId, {
      maxDistance: Number(slider.value),
      limit: PAGE_SIZE,
      offset,
    });
    total = page.total;
    clear(body);
    for (const item of page.items) {
      body.append(
        el("tr", {}, [
          el("td", { class: "patent-id" }, [item.patent_id]),
          el("td", {}, [fmtDistance(item.distance)]),
          el("td", {}, [String(item.hit_count)]),
        ]),
      );
    }
    const last = Math.min(offset + PAGE_SIZE, total);
    totalLabel.textContent =
      total === 0 ? "0 matches" : `${offset + 1}-${last} of ${total} matches`;
    prev.disabled = offset === 0;
    next.disabled = offset + PAGE_SIZE >= total;
  }

  slider.addEventListener("input", () => {
    sliderLabel.textContent = fmtDistance(Number(slider.value));
  });
  slider.addEventListener("change", () => {
    offset = 0;
    void load();
  });
  prev.addEventListener("click", () => {
    offset = Math.max(0, offset - PAGE_SIZE);
    void load();
  });
  next.addEventListener("click", () => {
    if (offset + PAGE_SIZE < total) {
      offset += PAGE_SIZE;
      void load();
    }
  });

  return {
    async show(id: number): Promise<void> {
      topicId = id;
      offset = 0;
      await load();
    },
    refresh: load,
  };
}
