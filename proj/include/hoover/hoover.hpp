#pragma once

#include "hoover/analysis.hpp"
#include "hoover/attacker.hpp"
#include "hoover/capture.hpp"
#include "hoover/dispatch.hpp"
#include "hoover/events.hpp"
#include "hoover/geometry.hpp"
#include "hoover/layout.hpp"
#include "hoover/learn/dataset.hpp"
#include "hoover/learn/forest.hpp"
#include "hoover/learn/linear.hpp"
#include "hoover/learn/model.hpp"
#include "hoover/learn/model_io.hpp"
#include "hoover/learn/tree.hpp"
#include "hoover/learn/validation.hpp"
#include "hoover/profile.hpp"
#include "hoover/rng.hpp"
#include "hoover/session_io.hpp"
#include "hoover/synth.hpp"
