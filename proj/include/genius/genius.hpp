// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "genius/advisor.hpp"
#include "genius/bench.hpp"
#include "genius/chat_client.hpp"
#include "genius/engine.hpp"
#include "genius/error.hpp"
#include "genius/flops.hpp"
#include "genius/report.hpp"
#include "genius/space.hpp"
