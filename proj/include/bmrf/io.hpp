#pragma once

#include <string>
#include <vector>

#include "bmrf/model.hpp"
#include "bmrf/param.hpp"

namespace bmrf {

std::string read_text(const std::string& path);
// Writes to a temporary sibling and renames it over `path`, so readers never
// see a partial file.
void atomic_write(const std::string& path, const std::string& content);

// Plain-text grid (rows of 0/1, blank lines and '#' comments ignored) or PBM
// (P1 or P4), detected from the content.
BinaryImage parse_image(const std::string& content, Boundary boundary);
BinaryImage read_image(const std::string& path, Boundary boundary);
std::string format_image_text(const BinaryImage& x);
std::string format_image_pbm(const BinaryImage& x, bool binary);
void write_image(const std::string& path, const BinaryImage& x);  // format from extension (.pbm or text)

// CSV with header "i,j,<covariate names...>[,mask]". With a mask column,
// nodes not listed or listed with mask 0 are inactive.
struct CovariateTable {
  CovariateField field;
  std::vector<std::string> names;
  std::vector<std::uint8_t> active;  // empty when the file has no mask column
};

CovariateTable parse_covariates_csv(const std::string& content, int n, int m);
CovariateTable read_covariates(const std::string& path, int n, int m);
std::string format_covariates_csv(const CovariateTable& t);

// {"groups": [[...]], "values": [...], "theta": [...]}
std::string state_to_json(const PartitionState& z);
PartitionState state_from_json(const std::string& text, int class_count);
PartitionState read_state(const std::string& path, int class_count);
// One JSON document per line.
std::vector<PartitionState> read_states_jsonl(const std::string& path, int class_count);

// "class-id value" per line; '#' starts a comment.
std::vector<double> parse_class_vector(const std::string& content);
std::string format_class_vector(const std::vector<double>& values, const std::string& header);

}  // namespace bmrf
