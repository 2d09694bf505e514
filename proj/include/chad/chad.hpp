#pragma once

// Umbrella header: sequential treatment trials where dosing both hurries a
// latent irreversible change along and produces the evidence for detecting
// it.  See the individual headers for the pieces:
//
//   model.hpp / response.hpp / change_point.hpp   trial models
//   engine.hpp                                    replication simulator
//   posterior.hpp                                 change-posterior filtering
//   quality.hpp                                   treatment metrics, thresholds,
//                                                 delay bounds
//   procedures.hpp                                stopping rules
//   dp.hpp                                        Bayes-optimal policy solver
//   evaluation.hpp                                Monte Carlo reports
//   model_io.hpp                                  config and policy files

#include "chad/change_point.hpp"
#include "chad/csv.hpp"
#include "chad/dp.hpp"
#include "chad/engine.hpp"
#include "chad/errors.hpp"
#include "chad/evaluation.hpp"
#include "chad/model.hpp"
#include "chad/model_io.hpp"
#include "chad/outcome.hpp"
#include "chad/parallel.hpp"
#include "chad/posterior.hpp"
#include "chad/procedures.hpp"
#include "chad/quality.hpp"
#include "chad/response.hpp"
#include "chad/rng.hpp"
#include "chad/stats.hpp"
