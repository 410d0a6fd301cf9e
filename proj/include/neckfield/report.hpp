#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "neckfield/lab.hpp"

// Flat-file emission of a sweep: CSV records, JSON summary, SVG plots.

namespace neckfield::lab {

// sweep.csv column order; the first line of every emitted CSV.
extern const char* const kSweepCsvHeader;

// Writes sweep.csv, summary.json, blowup.svg, and profile.svg into the
// directory, creating it when missing. Reruns overwrite; identical inputs
// produce identical bytes. Throws ValidationError when the directory or a
// file cannot be written.
void emit_report(const SweepResult& sweep, const ReportBundle& bundle,
                 const std::string& directory);

// Parses sweep.csv content back. Only the CSV columns are restored; the
// diagnostic fields keep their defaults. Throws ValidationError naming the
// offending line on malformed input.
std::vector<SweepRecord> load_records(std::istream& in);

}  // namespace neckfield::lab
