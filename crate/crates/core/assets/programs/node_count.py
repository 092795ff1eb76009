# CODE START
nodes = «node_list»
def count_nodes(nodes):
    return len(nodes)
ans = count_nodes(nodes)
# CODE END
