#pragma once

#include "swiftmem/adapters/embedder.hpp"
#include "swiftmem/adapters/http.hpp"
#include "swiftmem/adapters/tagger.hpp"
#include "swiftmem/adapters/text.hpp"
#include "swiftmem/bench.hpp"
#include "swiftmem/config.hpp"
#include "swiftmem/embedding_index.hpp"
#include "swiftmem/engine.hpp"
#include "swiftmem/error.hpp"
#include "swiftmem/ingest.hpp"
#include "swiftmem/memory_store.hpp"
#include "swiftmem/query_engine.hpp"
#include "swiftmem/serialize.hpp"
#include "swiftmem/snapshot.hpp"
#include "swiftmem/tag.hpp"
#include "swiftmem/tag_dag.hpp"
#include "swiftmem/temporal_index.hpp"
#include "swiftmem/temporal_parser.hpp"
#include "swiftmem/types.hpp"
#include "swiftmem/vector_math.hpp"
