#ifndef SENSR_IO_HPP
#define SENSR_IO_HPP

#include <string>

#include "sensr/auditor.hpp"
#include "sensr/data.hpp"
#include "sensr/fair_metric.hpp"
#include "sensr/metrics.hpp"
#include "sensr/model.hpp"
#include "sensr/trainer.hpp"

namespace sensr {

// Subspace file: {"dim": d, "directions": [[...]], "basis": [[...]]},
// row-major numeric arrays, shortest-round-trip doubles (bit-stable).
void save_subspace(const std::string& path, const SensitiveSubspace& subspace);
SensitiveSubspace load_subspace(const std::string& path);
// Loads the subspace and builds the complement-projector metric.
FairMetric load_fair_metric(const std::string& path);

// Checkpoint: {"arch": ..., "dims": [...], "weights": {...}}.
void save_model(const std::string& path, const ModelParams& params);
ModelParams load_model(const std::string& path);

void save_audit_report(const std::string& path, const AuditReport& report);
void save_perturbations_csv(const std::string& path, const AuditReport& report,
                            const TabularDataset& data);

void save_eval_report(const std::string& path, const EvalReport& report);
std::string eval_report_table(const EvalReport& report);

// Columns: epoch,lambda,clean_loss,robust_loss,mean_cost
void save_train_log(const std::string& path, const TrainLog& log);

}  // namespace sensr

#endif
