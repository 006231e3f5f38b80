// batched statement flush
public void flush() throws SQLException {
    if (currentBatchSize > 0) {
        log(currentBatchSize);
        preparedStatement = connection.prepareStatement(sql);
        preparedStatement.executeBatch();
        currentBatchSize = 0;
    }
    preparedStatement = null;
}
