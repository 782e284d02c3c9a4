#pragma once

#include "llmsched/core/distribution.hpp"
#include "llmsched/core/errors.hpp"
#include "llmsched/core/job.hpp"
#include "llmsched/core/model.hpp"
#include "llmsched/bayesnet/factor.hpp"
#include "llmsched/bayesnet/information.hpp"
#include "llmsched/bayesnet/network.hpp"
#include "llmsched/bayesnet/serialize.hpp"
#include "llmsched/profiler/calibration.hpp"
#include "llmsched/profiler/discretize.hpp"
#include "llmsched/profiler/estimator.hpp"
#include "llmsched/profiler/profile.hpp"
#include "llmsched/uncertainty/uncertainty.hpp"
#include "llmsched/scheduler/baselines.hpp"
#include "llmsched/scheduler/decision.hpp"
#include "llmsched/scheduler/intervals.hpp"
#include "llmsched/scheduler/llmsched.hpp"
#include "llmsched/simulator/cluster.hpp"
#include "llmsched/simulator/simulator.hpp"
#include "llmsched/workload/catalog.hpp"
#include "llmsched/workload/generator.hpp"
#include "llmsched/workload/trace.hpp"
