import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    environment: "happy-dom",
    include: ["tests/e2e.test.ts"],
    // spawning the service and waiting for /health takes a while
    testTimeout: 60_000,
    hookTimeout: 60_000,
  },
});
