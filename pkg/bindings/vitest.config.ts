import { defineConfig } from "vitest/config";

// each parity test shells out to the Python CLI, so allow slow starts
export default defineConfig({
  test: {
    testTimeout: 120_000,
    hookTimeout: 120_000,
  },
});
