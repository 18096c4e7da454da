/* Small DOM construction helpers; no framework, no templates. */

export function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  attrs: Record<string, string> = {},
  ...children: (Node | string)[]
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  for (const [key, value] of Object.entries(attrs)) {
    node.setAttribute(key, value);
  }
  for (const child of children) {
    node.append(child);
  }
  return node;
}

export function clear(node: HTMLElement): void {
  while (node.firstChild) {
    node.removeChild(node.firstChild);
  }
}

export function button(label: string, onClick: () => void, cls = ""): HTMLButtonElement {
  const node = el("button", cls ? { class: cls } : {}, label);
  node.addEventListener("click", onClick);
  return node;
}
