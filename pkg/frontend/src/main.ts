import { PricingClient, ServiceError } from "./api.js";
import { WhatIfPanel, featureBounds, renderExplanation } from "./dom.js";
import type { Instance, ModelEntry } from "./types.js";

// page shell: base URL + model id + instance JSON in, panels out

function byId<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing #${id}`);
  return node as T;
}

function showError(err: unknown): void {
  const box = byId<HTMLElement>("error");
  if (err instanceof ServiceError) {
    box.textContent = `${err.code}: ${err.message}`;
  } else {
    box.textContent = String(err);
  }
  box.hidden = false;
}

async function loadAndExplain(): Promise<void> {
  byId<HTMLElement>("error").hidden = true;
  const base = byId<HTMLInputElement>("base-url").value;
  const modelId = byId<HTMLInputElement>("model-id").value.trim();
  const instance = JSON.parse(byId<HTMLTextAreaElement>("instance-json").value) as Instance;

  const client = new PricingClient(base);
  const entry: ModelEntry = await client.getModel(modelId);
  const res = await client.explain(modelId, { instance });
  renderExplanation(byId<HTMLElement>("explanation"), res.explanation);

  const select = byId<HTMLSelectElement>("whatif-feature");
  select.replaceChildren();
  for (const name of entry.model.schema.feature_names) {
    const opt = document.createElement("option");
    opt.value = name;
    opt.textContent = name;
    select.append(opt);
  }
  const mount = byId<HTMLElement>("whatif");
  const build = () => {
    const feature = select.value;
    const bounds = featureBounds(entry, feature);
    const panel = new WhatIfPanel(document, {
      client,
      modelId,
      instance,
      feature,
      ...bounds,
      onError: showError,
    });
    mount.replaceChildren(panel.root);
  };
  select.onchange = build;
  build();
}

byId<HTMLButtonElement>("load").addEventListener("click", () => {
  loadAndExplain().catch(showError);
});
