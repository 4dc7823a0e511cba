import { defineConfig } from "vitest/config";

export default defineConfig({
    test: {
        environment: "jsdom",
        globalSetup: "./tests/globalSetup.ts",
        // every test file talks to the same live backend; keep them serial
        fileParallelism: false,
        testTimeout: 30_000,
        hookTimeout: 120_000,
    },
});
