// Copyright 2026 The nomad-curate Authors
// SPDX-License-Identifier: Apache-2.0

#include "nomad/cli/cli.hpp"

int main(int argc, char** argv) { return nomad::cli::run(argc, argv); }
