// Copyright 2026 The aerosplat Authors
// SPDX-License-Identifier: Apache-2.0

#include "aerosplat/cli.hpp"

int main(int argc, char** argv) { return aerosplat::cli_main(argc, argv); }
