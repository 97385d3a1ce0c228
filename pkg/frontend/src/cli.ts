#!/usr/bin/env node
import { main } from "./main.js";

process.exit(main(process.argv.slice(2)));
