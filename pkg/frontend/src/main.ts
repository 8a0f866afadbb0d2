import { fetchInfo, fetchIsochrone } from "./api";
import { MapPane } from "./map";
import {
  DEBOUNCE_MS,
  SLIDER_DETENTS_MIN,
  applyError,
  applyResponse,
  beginRequest,
  debounce,
  dismissError,
  everythingReachable,
  initialState,
  type ExplorerState,
} from "./state";

const tauInput = document.getElementById("tau") as HTMLInputElement;
const tauLabel = document.getElementById("tau-label") as HTMLSpanElement;
const algoSelect = document.getElementById("algo") as HTMLSelectElement;
const statsEl = document.getElementById("stats") as HTMLSpanElement;
const noticeEl = document.getElementById("notice") as HTMLSpanElement;
const banner = document.getElementById("banner") as HTMLDivElement;
const bannerText = document.getElementById("banner-text") as HTMLSpanElement;
const bannerClose = document.getElementById("banner-close") as HTMLButtonElement;
const canvas = document.getElementById("map") as HTMLCanvasElement;
const detents = document.getElementById("detents") as HTMLDataListElement;

async function boot() {
  const info = await fetchInfo("");
  const pane = new MapPane(canvas, info);
  let state: ExplorerState = initialState(info.algorithms[0] ?? "isodijkstra");

  for (const algo of info.algorithms) {
    const opt = document.createElement("option");
    opt.value = algo;
    opt.textContent = algo;
    algoSelect.appendChild(opt);
  }
  algoSelect.value = state.algo;
  const maxMin = Math.max(10, Math.ceil(info.tau_max_s / 60));
  tauInput.max = String(Math.min(maxMin, 4700));
  for (const m of SLIDER_DETENTS_MIN) {
    if (m <= Number(tauInput.max)) {
      const opt = document.createElement("option");
      opt.value = String(m);
      detents.appendChild(opt);
    }
  }

  function render() {
    pane.setLayer(state.layer);
    if (state.source) pane.setMarker(state.source.lat, state.source.lon);
    tauLabel.textContent = `${state.tauMinutes} min`;
    if (state.layer) {
      const p = state.layer.properties;
      statsEl.textContent =
        `${p.algo}: ${p.edge_count} edges in ${p.query_ms.toFixed(1)} ms ` +
        `(source #${p.source})`;
    }
    noticeEl.textContent = everythingReachable(state)
      ? "everything reachable at this limit"
      : "";
    banner.style.display = state.error ? "flex" : "none";
    bannerText.textContent = state.error ?? "";
  }

  async function dispatch() {
    if (!state.source) return;
    const begun = beginRequest(
      state,
      state.source,
      Number(tauInput.value),
      algoSelect.value,
    );
    state = begun.state;
    try {
      const res = await fetchIsochrone(
        "",
        state.source!.lat,
        state.source!.lon,
        state.tauMinutes * 60,
        state.algo,
      );
      state = applyResponse(state, begun.seq, res);
    } catch (err) {
      state = applyError(state, begun.seq, String(err));
    }
    render();
  }

  const debouncedDispatch = debounce(dispatch, DEBOUNCE_MS);

  pane.onClick = (lat, lon) => {
    state = { ...state, source: { lat, lon } };
    render();
    void dispatch();
  };
  tauInput.addEventListener("input", () => {
    state = { ...state, tauMinutes: Number(tauInput.value) };
    tauLabel.textContent = `${state.tauMinutes} min`;
    debouncedDispatch();
  });
  algoSelect.addEventListener("change", () => {
    state = { ...state, algo: algoSelect.value };
    void dispatch();
  });
  bannerClose.addEventListener("click", () => {
    state = dismissError(state);
    render();
  });

  render();
}

boot().catch((err) => {
  bannerText.textContent = `service unreachable: ${err}`;
  banner.style.display = "flex";
});
