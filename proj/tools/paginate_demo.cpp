// Pages through one broad query and prints what each partitioning event chose.

#include <iostream>

#include "hssps/hssps.hpp"

using namespace hssps;

int main() {
  CorpusSpec spec;
  spec.seed = 7;
  spec.accounts_per_tenant = SizeDistribution::fixed_size(40);
  spec.resources_per_account = SizeDistribution::fixed_size(500);
  spec.deleted_ratio_range = {0.0, 0.3};

  auto loaded = load_corpus(generate_corpus(spec), kDefaultPageSize, 200);
  const CostModel cost;
  MetadataStore metadata(loaded.layout.corpus_ptr());
  CursorStore cursors;
  EngineState state{loaded.layout, *loaded.pool, cost, metadata, cursors};

  EngineConfig config;
  config.cardinality_threshold = 1000;
  const Engine engine(config);

  const Query query = parse_query("tenant=t000 and service in (ec2, iam) and class=search-heavy");
  std::cout << "query: " << print_query(query) << '\n';

  Tick now = 100;
  auto page = engine.first_page(query, state, now);
  std::size_t total = 0;
  for (int n = 1;; ++n) {
    total += page.rows.size();
    std::cout << "page " << n << ": rows=" << page.rows.size() << " pages_touched=" << page.stats.pages_touched
              << " disk_reads=" << page.stats.disk_reads;
    if (page.diagnostics && !page.diagnostics->values.empty()) {
      std::cout << " accounts=" << page.diagnostics->values.front() << ".." << page.diagnostics->values.back()
                << " score=" << page.diagnostics->composite_score;
    }
    std::cout << '\n';
    if (!page.next_token) break;
    page = engine.next_page(query, *page.next_token, state, ++now);
  }
  std::cout << "total rows: " << total << '\n';
}
