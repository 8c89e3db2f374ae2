// Umbrella header.

#pragma once

#include "adversary.hpp"
#include "aes128.hpp"
#include "analytics.hpp"
#include "channel.hpp"
#include "common.hpp"
#include "config.hpp"
#include "detection.hpp"
#include "harness.hpp"
#include "packet.hpp"
#include "protocol.hpp"
#include "pulse.hpp"
#include "receiver.hpp"
#include "rng.hpp"
#include "sts.hpp"
