from sentence_transformers import SentenceTransformer as ST

encoder = ST("sentence-transformers/all-MiniLM-L6-v2")
vectors = encoder.encode(["hello", "world"])
