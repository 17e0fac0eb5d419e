// Shared test helpers: fixture loading and a canned-response fetch.

import { readFileSync } from "fs";
import { dirname, join } from "path";
import { fileURLToPath } from "url";

import type { FetchLike } from "../src/api.js";

const here = dirname(fileURLToPath(import.meta.url));

export function fixture<T>(name: string): T {
  return JSON.parse(readFileSync(join(here, "fixtures", name), "utf-8")) as T;
}

export interface CannedRoute {
  method?: string;
  path: string | RegExp;
  status?: number;
  body: unknown | ((init?: RequestInit) => unknown);
}

/** A FetchLike that answers from an ordered route table and logs calls. */
export function cannedFetch(routes: CannedRoute[]): FetchLike & { calls: string[] } {
  const calls: string[] = [];
  const impl = async (input: string, init?: RequestInit): Promise<Response> => {
    const method = init?.method ?? "GET";
    calls.push(`${method} ${input}`);
    for (const route of routes) {
      const matches =
        typeof route.path === "string" ? input.endsWith(route.path) : route.path.test(input);
      if (matches && (route.method ?? "GET") === method) {
        const body = typeof route.body === "function" ? route.body(init) : route.body;
        return new Response(JSON.stringify(body), {
          status: route.status ?? 200,
          headers: { "Content-Type": "application/json" },
        });
      }
    }
    return new Response(JSON.stringify({ detail: `no canned route for ${method} ${input}` }), {
      status: 500,
    });
  };
  return Object.assign(impl, { calls });
}
