import { renderReport } from "./render";

export const PAYLOAD_ELEMENT_ID = "proofflow-payload";
export const APP_ELEMENT_ID = "app";

/* Reads the embedded JSON payload and renders into #app.  Parse failures and
   a missing script tag still produce a visible page, never a blank one. */
export function boot(doc: Document): void {
  const mount = doc.getElementById(APP_ELEMENT_ID);
  if (!mount) return;

  const slot = doc.getElementById(PAYLOAD_ELEMENT_ID);
  if (!slot) {
    renderReport(mount, undefined);
    return;
  }
  let data: unknown;
  try {
    data = JSON.parse(slot.textContent ?? "null");
  } catch {
    data = undefined;
  }
  renderReport(mount, data);
}

function autoBoot(): void {
  if (typeof document === "undefined") return;
  if (document.readyState === "loading") {
    document.addEventListener("DOMContentLoaded", () => boot(document));
  } else {
    boot(document);
  }
}

autoBoot();
